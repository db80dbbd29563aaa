//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line with its key numbers (run with `--nocapture` to see
//! them). Expected values come from independent oracles computed inside
//! the tests — brute-force Jaccard, closed-form collision probabilities,
//! hand-counted n-gram tables — never from the code paths under test.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zhpipe_cli::config::PipelineConfig;
use zhpipe_cli::pipeline::Pipeline;
use zhpipe_cli::Stage;
use zhpipe_core::classifier::{FeatureParams, LinearTextClassifier, TrainParams};
use zhpipe_core::clean::{clean_document, CleanConfig};
use zhpipe_core::corpus::{Document, Source};
use zhpipe_core::dedup::{
    deduplicate, estimate_jaccard, lsh_bucket_keys, minhash, shingles, DedupParams,
};
use zhpipe_core::filter::{sensitive_filter, SensitiveLexicon};
use zhpipe_core::lexicon::bundled_t2s;
use zhpipe_core::mix::{compute_epochs, mix_2b6_13b, mix_200b, validate_mix, MixEntry, MixSpec, MixWarning};
use zhpipe_core::quality::{compare_configs, perplexity, Better, NGramLm, ProbeParams, Smoothing};

fn pass(name: &str, start: Instant, detail: &str) {
    println!("PASS {name}: {detail} ({:.2}s)", start.elapsed().as_secs_f64());
}

fn cjk_doc(n: usize) -> String {
    const POOL: [char; 20] = [
        '天', '地', '人', '和', '水', '火', '山', '川', '风', '雨', '春', '夏', '秋', '冬', '日',
        '月', '星', '辰', '江', '河',
    ];
    (0..n).map(|i| POOL[i % POOL.len()]).collect()
}

// 1. Cleaning boundary suite: the 60%-ratio and 150-char rules use
//    strict "less than", so exact boundary values keep.
#[test]
fn a01_cleaning_boundaries_are_strict() {
    let start = Instant::now();
    let cfg = CleanConfig::default();

    for n in 140..=160usize {
        let doc = Document::new(Source::CommonCrawl, &cjk_doc(n));
        let outcome = clean_document(&doc, &cfg);
        let expect_keep = n >= 150;
        assert_eq!(
            outcome.kept, expect_keep,
            "length {n}: kept={} audit={:?}",
            outcome.kept, outcome.doc.audit
        );
    }

    // fixed 250 non-whitespace scalars, CJK count swept across the
    // boundary: ratio = cjk/250, exactly 0.60 at cjk = 150
    for cjk in 140..=160usize {
        let text: String = cjk_doc(cjk) + &"a".repeat(250 - cjk);
        let doc = Document::new(Source::CommonCrawl, &text);
        let outcome = clean_document(&doc, &cfg);
        let expect_keep = cjk >= 150;
        assert_eq!(
            outcome.kept, expect_keep,
            "cjk {cjk}/250: kept={} audit={:?}",
            outcome.kept, outcome.doc.audit
        );
    }
    pass("cleaning boundary suite", start, "42 boundary documents, zero misclassified");
}

// 2. Sensitive-word semantics: verdicts depend only on the DISTINCT
//    match count, threshold "more than three".
#[test]
fn a02_sensitive_word_distinct_semantics() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t2s = bundled_t2s();

    // per-word disjoint scalar pools (CJK Extension A, which the t2s
    // table neither maps from nor to), so words never overlap each
    // other or the body text and the embedded count is exact by
    // construction
    let word_pool = |slot: usize, offset: u32| -> char {
        char::from_u32(0x3400 + (slot as u32) * 64 + offset).unwrap()
    };
    let body_char = |rng: &mut ChaCha8Rng| -> char {
        char::from_u32(0x3D00 + rng.random_range(0..512)).unwrap()
    };

    let trials = 10_000;
    for _ in 0..trials {
        let n_words = rng.random_range(4..=8usize);
        let words: Vec<String> = (0..n_words)
            .map(|slot| (0..3).map(|i| word_pool(slot, 3 * rng.random_range(0..20) + i)).collect())
            .collect();
        let distinct: BTreeSet<String> = words.iter().cloned().collect();
        if distinct.len() != words.len() {
            continue; // rare in-slot collision; the construction needs distinct words
        }
        let lex = SensitiveLexicon::new(words.clone(), t2s, "t").unwrap();

        // assemble from whole pieces so embedded words stay contiguous
        let embedded = rng.random_range(0..=n_words);
        let mut pieces: Vec<String> = (0..12)
            .map(|_| (0..rng.random_range(2..8)).map(|_| body_char(&mut rng)).collect())
            .collect();
        for word in words.iter().take(embedded) {
            for _ in 0..rng.random_range(1..=4usize) {
                pieces.push(word.clone());
            }
        }
        use rand::seq::SliceRandom;
        pieces.shuffle(&mut rng);
        let text = pieces.concat();

        let doc = Document::new(Source::CommonCrawl, &text);
        let verdict = sensitive_filter(&doc, &lex, 3);
        let expect_drop = embedded > 3;
        assert_eq!(
            verdict.is_drop(),
            expect_drop,
            "embedded {embedded} distinct words, verdict {verdict:?}"
        );
    }
    pass("sensitive-word semantics", start, &format!("{trials} random documents, zero violations"));
}

fn corpora_from_pools(pos_pool: &[char], neg_pool: &[char], n: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |pool: &[char]| -> String {
        let len = rng.random_range(20..60);
        (0..len).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    };
    let pos = (0..n).map(|_| sample(pos_pool)).collect();
    let neg = (0..n).map(|_| sample(neg_pool)).collect();
    (pos, neg)
}

// 3. Classifier separability and null-distribution sanity.
#[test]
fn a03_classifier_separability() {
    let start = Instant::now();
    let tech: Vec<char> = "电脑软件程序数据网络科学技术研究发展计算模型".chars().collect();
    let fruit: Vec<char> = "苹果香蕉橙子葡萄西瓜草莓柠檬樱桃菠萝荔枝芒果".chars().collect();

    let (pos, neg) = corpora_from_pools(&tech, &fruit, 1000, 7);
    let hyper = TrainParams {
        features: FeatureParams { dim: 1 << 16, ngram_orders: vec![1, 2], hash_seed: 3 },
        ..Default::default()
    };
    let outcome = LinearTextClassifier::train(&pos, &neg, &hyper).unwrap();
    let separable_acc = outcome.held_out_accuracy.unwrap();
    assert!(separable_acc >= 0.99, "separable accuracy {separable_acc}");

    // rank-based AUC sanity floor on a fresh labeled set
    let (pos_test, neg_test) = corpora_from_pools(&tech, &fruit, 200, 555);
    let mut scored: Vec<(f64, bool)> = pos_test
        .iter()
        .map(|d| (outcome.model.score(d), true))
        .chain(neg_test.iter().map(|d| (outcome.model.score(d), false)))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (mut rank_sum, mut n_pos) = (0.0f64, 0.0f64);
    for (rank, (_, is_pos)) in scored.iter().enumerate() {
        if *is_pos {
            rank_sum += (rank + 1) as f64;
            n_pos += 1.0;
        }
    }
    let n_neg = scored.len() as f64 - n_pos;
    let auc = (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
    assert!(auc >= 0.5, "auc {auc}");

    // identical distributions: expect chance-level held-out accuracy
    let mut null_accs = Vec::new();
    for seed in 0..5u64 {
        let (pos, neg) = corpora_from_pools(&tech, &tech, 1000, 100 + seed);
        let hyper = TrainParams {
            seed,
            features: FeatureParams { dim: 1 << 16, ngram_orders: vec![1, 2], hash_seed: 3 },
            ..Default::default()
        };
        let outcome = LinearTextClassifier::train(&pos, &neg, &hyper).unwrap();
        null_accs.push(outcome.held_out_accuracy.unwrap());
    }
    let mean_null = null_accs.iter().sum::<f64>() / null_accs.len() as f64;
    assert!(
        (0.45..=0.55).contains(&mean_null),
        "null accuracy mean {mean_null} over seeds: {null_accs:?}"
    );
    pass(
        "classifier separability",
        start,
        &format!("separable acc {separable_acc:.4}, null acc {mean_null:.4} over 5 seeds"),
    );
}

// 4. MinHash estimator against the brute-force Jaccard oracle.
#[test]
fn a04_minhash_estimator_unbiased() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for t in 0..20u64 {
        let shared = 3 * t;
        let a: HashSet<u64> = (0..60).map(|i| i * 977 + 13).collect();
        let b: HashSet<u64> = ((60 - shared)..(120 - shared)).map(|i| i * 977 + 13).collect();
        // oracle: exact intersection-over-union
        let inter = a.intersection(&b).count() as f64;
        let union = (a.len() + b.len()) as f64 - inter;
        let oracle = inter / union;

        let families = 200;
        let mut sum = 0.0;
        for f in 0..families {
            let params = DedupParams { seed: 9_000 + f * 31 + t, ..DedupParams::default() };
            let seeds = params.family_seeds();
            let sa = minhash("a", &a, &seeds);
            let sb = minhash("b", &b, &seeds);
            sum += estimate_jaccard(&sa, &sb).unwrap();
        }
        let mean = sum / families as f64;
        let err = (mean - oracle).abs();
        worst = worst.max(err);
        assert!(err <= 0.05, "pair {t}: oracle {oracle:.4}, mean estimate {mean:.4}");
    }
    pass("minhash estimator", start, &format!("20 set pairs x 200 families, worst |bias| {worst:.4}"));
}

// 5. LSH S-curve: empirical candidate rate vs 1-(1-s^r)^b.
#[test]
fn a05_lsh_s_curve_matches_closed_form() {
    let start = Instant::now();
    let (bands, rows) = (32usize, 4usize);
    let mut results = Vec::new();
    // (s, p, q) with s = p/q exactly
    for &(s, p, q) in &[
        (0.1, 1u64, 10u64),
        (0.3, 3, 10),
        (0.5, 1, 2),
        (0.7, 7, 10),
        (0.8, 4, 5),
        (0.9, 9, 10),
    ] {
        let m = (p + q) * 20; // |A| = |B| = m
        let c = 2 * p * m / (p + q); // shared elements, J = c/(2m-c) = s
        debug_assert_eq!(c as f64 / (2 * m - c) as f64, s);

        let trials = 2000u64;
        let mut candidates = 0usize;
        for trial in 0..trials {
            let base = trial * 4_000;
            let a: HashSet<u64> = (base..base + m).collect();
            let b: HashSet<u64> = (base..base + c).chain(base + m..base + 2 * m - c).collect();
            let params = DedupParams { seed: 77_000 + trial, ..DedupParams::default() };
            let seeds = params.family_seeds();
            let sa = minhash("a", &a, &seeds);
            let sb = minhash("b", &b, &seeds);
            let ka = lsh_bucket_keys(&sa, bands, rows);
            let kb = lsh_bucket_keys(&sb, bands, rows);
            if ka.iter().zip(&kb).any(|(x, y)| x == y) {
                candidates += 1;
            }
        }
        let empirical = candidates as f64 / trials as f64;
        let theory = 1.0 - (1.0 - s.powi(rows as i32)).powi(bands as i32);
        assert!(
            (empirical - theory).abs() <= 0.05,
            "s={s}: empirical {empirical:.4} vs theory {theory:.4}"
        );
        results.push(format!("s={s}:{empirical:.3}/{theory:.3}"));
    }
    pass("lsh s-curve", start, &results.join(" "));
}

/// Sorted-vector intersection; an independent route from the HashSet
/// Jaccard used elsewhere.
fn sorted_jaccard(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut inter) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

// 6. Dedup vs brute-force all-pairs oracle at n=1000 with 50 planted
//    near-duplicate pairs.
#[test]
fn a06_dedup_matches_brute_force_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let pool: Vec<char> = (0..100u32).map(|i| char::from_u32(0x4E00 + i * 7).unwrap()).collect();
    let random_text = |len: usize, rng: &mut ChaCha8Rng| -> String {
        (0..len).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    };

    let params = DedupParams::default();
    let mut texts: Vec<String> = Vec::new();
    for _ in 0..900 {
        let len = rng.random_range(150..250);
        texts.push(random_text(len, &mut rng));
    }
    // plant 50 near-duplicate pairs with oracle similarity comfortably
    // above the 0.8 threshold (at exactly 0.8 the k=128 estimator is a
    // coin flip, which no detector could pass at 0.95 recall)
    for _ in 0..50 {
        let base = random_text(200, &mut rng);
        let mutated = loop {
            let mut chars: Vec<char> = base.chars().collect();
            for _ in 0..rng.random_range(1..=3usize) {
                let at = rng.random_range(5..chars.len() - 5);
                chars[at] = pool[rng.random_range(0..pool.len())];
            }
            let cand: String = chars.into_iter().collect();
            let sa: Vec<u64> = {
                let mut v: Vec<u64> =
                    shingles(&base, params.shingle_w).into_iter().collect();
                v.sort_unstable();
                v
            };
            let sb: Vec<u64> = {
                let mut v: Vec<u64> =
                    shingles(&cand, params.shingle_w).into_iter().collect();
                v.sort_unstable();
                v
            };
            if sorted_jaccard(&sa, &sb) >= 0.85 {
                break cand;
            }
        };
        texts.push(base);
        texts.push(mutated);
    }

    let docs: Vec<Document> =
        texts.iter().map(|t| Document::new(Source::CommonCrawl, t)).collect();

    // oracle: brute-force all-pairs exact Jaccard over shingle sets
    let sets: Vec<Vec<u64>> = docs
        .iter()
        .map(|d| {
            let mut v: Vec<u64> = shingles(&d.text, params.shingle_w).into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut oracle_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for i in 0..docs.len() {
        for j in (i + 1)..docs.len() {
            if sorted_jaccard(&sets[i], &sets[j]) >= params.jaccard_threshold {
                let (a, b) = (docs[i].id.clone(), docs[j].id.clone());
                oracle_pairs.insert((a.clone().min(b.clone()), a.max(b)));
            }
        }
    }
    assert!(oracle_pairs.len() >= 50, "only {} oracle pairs planted", oracle_pairs.len());

    let outcome = deduplicate(docs.clone(), &params).unwrap();
    let mut detected: BTreeSet<(String, String)> = BTreeSet::new();
    for cluster in &outcome.clusters {
        for (a, b, _) in &cluster.evidence {
            detected.insert((a.clone().min(b.clone()), a.clone().max(b.clone())));
        }
    }
    let true_positives = detected.intersection(&oracle_pairs).count() as f64;
    let precision = true_positives / detected.len() as f64;
    let recall = true_positives / oracle_pairs.len() as f64;
    assert!(precision >= 0.95, "precision {precision:.4}");
    assert!(recall >= 0.95, "recall {recall:.4}");

    // shard-order independence: a reversed input yields the same survivors
    let mut reversed = docs;
    reversed.reverse();
    let backward = deduplicate(reversed, &params).unwrap();
    let ids = |v: &[Document]| -> BTreeSet<String> { v.iter().map(|d| d.id.clone()).collect() };
    assert_eq!(ids(&outcome.survivors), ids(&backward.survivors));

    pass(
        "dedup oracle equivalence",
        start,
        &format!(
            "{} oracle pairs, precision {precision:.3}, recall {recall:.3}, order-independent",
            oracle_pairs.len()
        ),
    );
}

// 7. Probe-LM soundness: closed forms, hand counts, and the
//    clean-beats-noisy comparison.
#[test]
fn a07_probe_lm_soundness() {
    let start = Instant::now();

    // uniform model: vocab of 4, each char once, add-0: PPL == 4 exactly
    let lm = NGramLm::train(&["abcd".into()], 1, Smoothing::AddK { k: 0.0 }).unwrap();
    let ppl = perplexity(&lm, &["dcba".into(), "ccaa".into()]).unwrap();
    assert!((ppl - 4.0).abs() < 4.0 * 1e-12, "uniform ppl {ppl}");

    // hand-counted bigrams of "aaab": aa, aa, ab
    let lm = NGramLm::train(&["aaab".into()], 2, Smoothing::AddK { k: 0.0 }).unwrap();
    assert!((lm.prob(&['a'], 'a').unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((lm.prob(&['a'], 'b').unwrap() - 1.0 / 3.0).abs() < 1e-12);

    // clean arm beats the 30%-noise arm in at least 19 of 20 trials
    let fluent: Vec<String> = {
        let base = [
            "今天的天气很好我们一起去公园散步",
            "他认真地读完了这本书觉得收获很大",
            "学习语言需要长期的积累和不断的练习",
            "春天来了花园里的花都开了",
            "科学研究需要严谨的态度和扎实的基础",
            "我们在图书馆里安静地看书学习",
            "城市的夜景在灯光下显得格外美丽",
            "孩子们在操场上开心地跑来跑去",
        ];
        (0..240).map(|i| base[i % base.len()].to_string()).collect()
    };
    let dev: Vec<String> = fluent.iter().take(40).cloned().collect();
    let probe = ProbeParams::default();
    let mut clean_wins = 0;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + trial);
        let noisy: Vec<String> = fluent
            .iter()
            .map(|line| {
                if rng.random::<f64>() < 0.30 {
                    let len = line.chars().count();
                    (0..len)
                        .map(|_| char::from_u32(rng.random_range(0x4E00..0x9FA0)).unwrap())
                        .collect()
                } else {
                    line.clone()
                }
            })
            .collect();
        let verdict = compare_configs(&fluent, &noisy, &dev, &probe).unwrap();
        if verdict.better == Better::A {
            clean_wins += 1;
        }
    }
    assert!(clean_wins >= 19, "clean arm won only {clean_wins}/20 trials");
    pass("probe-lm soundness", start, &format!("uniform/bigram exact, clean arm won {clean_wins}/20"));
}

// 8. BPE correctness: first merge, round-trips, deterministic merges.
#[test]
fn a08_bpe_correctness() {
    let start = Instant::now();
    use zhpipe_core::bpe::{train_bpe, Tokenizer};

    let model = train_bpe(&["aaab aaab".into()], 257).unwrap();
    let first = model.merges().next().unwrap();
    assert_eq!(first, (b"a".as_slice(), b"a".as_slice()), "first merge {first:?}");

    let mut corpus = Vec::new();
    for _ in 0..4 {
        corpus.push("天地玄黄宇宙洪荒日月盈昃辰宿列张".to_string());
        corpus.push("寒来暑往秋收冬藏闰余成岁律吕调阳".to_string());
        corpus.push("mixed ascii text 123 与中文混排".to_string());
    }
    let model = train_bpe(&corpus, 320).unwrap();
    let alphabet: Vec<char> = corpus.join("").chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..1000 {
        let len = rng.random_range(0..50);
        let text: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        assert_eq!(model.decode(&model.encode(&text)).unwrap(), text);
    }

    let again = train_bpe(&corpus, 320).unwrap();
    let merges_a: Vec<_> = model.merges().collect();
    let merges_b: Vec<_> = again.merges().collect();
    assert_eq!(merges_a, merges_b, "merge lists differ across runs");

    pass(
        "bpe correctness",
        start,
        &format!("first merge (a,a), 1000 round-trips, {} deterministic merges", merges_a.len()),
    );
}

// 9. Mixer convergence on the reference 200B weights, plus the
//    100.99% weight-sum diagnostic and the epochs formula.
#[test]
fn a09_mixer_convergence_and_diagnostics() {
    let start = Instant::now();

    let mut spec = mix_200b();
    spec.total_training_tokens = 0;
    let mut sources: BTreeMap<Source, Vec<Document>> = BTreeMap::new();
    for entry in &spec.entries {
        let docs = (0..3)
            .map(|i| Document::new(entry.source, &format!("{}的第{i}篇样例文档。", entry.source)))
            .collect();
        sources.insert(entry.source, docs);
    }
    let n_draws = 1_000_000;
    let stream = zhpipe_core::mix::sample_stream(&sources, &spec, 424_242, n_draws).unwrap();
    let mut worst: f64 = 0.0;
    for entry in &spec.entries {
        let realized = stream.realized_weights.get(&entry.source).copied().unwrap_or(0.0);
        let err = (realized - entry.weight).abs();
        worst = worst.max(err);
        assert!(
            err <= 0.005,
            "{}: realized {realized:.5} vs spec {:.5}",
            entry.source,
            entry.weight
        );
    }

    let warnings = validate_mix(&mix_2b6_13b(), 10.0).unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| matches!(w, MixWarning::WeightSumOff { sum } if (sum - 1.0099).abs() < 1e-9)),
        "expected the 100.99% weight-sum warning, got {warnings:?}"
    );

    let mut epoch_worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let weight = rng.random_range(0.01..1.0f64);
        let quantity = rng.random_range(1..10_000_000u64);
        let total = rng.random_range(1..10_000_000_000u64);
        let spec = MixSpec {
            entries: vec![MixEntry { source: Source::News, quantity_tokens: quantity, weight }],
            total_training_tokens: total,
        };
        let got = compute_epochs(&spec).unwrap()[&Source::News];
        let expected = weight * total as f64 / quantity as f64;
        let err = (got - expected).abs() / expected.max(1e-300);
        epoch_worst = epoch_worst.max(err);
        assert!(err <= 1e-9, "epochs {got} vs {expected}");
    }

    pass(
        "mixer convergence",
        start,
        &format!(
            "1M draws worst |realized-spec| {worst:.5}, weight-sum flagged, epochs rel err <= {epoch_worst:.1e}"
        ),
    );
}

fn mini_corpus_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/mini_corpus/config.toml")
}

fn pipeline_into(dir: &Path) -> Pipeline {
    let (mut config, base) = PipelineConfig::load(&mini_corpus_config()).unwrap();
    config.io.output_dir = dir.to_path_buf();
    config.workers = 2;
    Pipeline::new(config, base)
}

fn stage_file_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.file_name().unwrap().to_string_lossy();
                // timing-bearing reports and absolute-path payloads are
                // not part of the determinism contract
                if name == "report.json" || name == "eval.json" || name == "mix.json" || name == "stats.json" {
                    continue;
                }
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

// 10. End-to-end determinism and per-stage document conservation on the
//     bundled mini corpus.
#[test]
fn a10_end_to_end_determinism_and_conservation() {
    let start = Instant::now();
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();

    let report_a = pipeline_into(tmp_a.path()).run(Stage::All).unwrap();
    let report_b = pipeline_into(tmp_b.path()).run(Stage::All).unwrap();

    for stage in &report_a.stages {
        assert!(
            stage.conserves_documents(),
            "{}: in={} out={} dropped={}",
            stage.stage,
            stage.docs_in,
            stage.docs_out,
            stage.dropped_total()
        );
    }
    for name in ["clean", "filter", "dedup"] {
        let stage = report_a.stages.iter().find(|s| s.stage == name).unwrap();
        assert!(stage.dropped_total() > 0, "{name} dropped nothing on the mini corpus");
    }

    let files_a = stage_file_bytes(tmp_a.path());
    let files_b = stage_file_bytes(tmp_b.path());
    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>(),
        "file sets differ"
    );
    let mut shard_files = 0;
    for (name, bytes) in &files_a {
        assert_eq!(bytes, &files_b[name], "{name} differs between identically-seeded runs");
        if name.ends_with(".jsonl") {
            shard_files += 1;
        }
    }

    for (sa, sb) in report_a.stages.iter().zip(&report_b.stages) {
        assert_eq!(sa.deterministic_view(), sb.deterministic_view());
    }

    pass(
        "end-to-end determinism",
        start,
        &format!("{shard_files} data files byte-identical, conservation holds at every stage"),
    );
}

// 11. Throughput smoke test (informational): cleaning should sustain
//     >= 20 MB/s per worker on the mini corpus replicated to 200 MB.
//     A miss prints a warning but never fails the suite.
#[test]
fn a11_cleaning_throughput_smoke() {
    let start = Instant::now();
    let base = mini_corpus_config();
    let data_dir = base.parent().unwrap();
    let mut texts: Vec<String> = Vec::new();
    for file in ["common_crawl.jsonl", "news.jsonl", "ebooks.jsonl", "encyclopedia.jsonl"] {
        let (docs, _) = zhpipe_core::corpus::ingest_jsonl(
            &data_dir.join(file),
            Source::CommonCrawl,
            zhpipe_core::corpus::ErrorPolicy::Skip,
        )
        .unwrap();
        texts.extend(docs.into_iter().map(|d| d.text));
    }

    const TARGET_BYTES: usize = 200 * 1024 * 1024;
    let mut docs: Vec<Document> = Vec::new();
    let mut total = 0usize;
    'outer: loop {
        for text in &texts {
            docs.push(Document::new(Source::CommonCrawl, text));
            total += text.len();
            if total >= TARGET_BYTES {
                break 'outer;
            }
        }
    }

    let cfg = CleanConfig::default();
    let timer = Instant::now();
    let mut kept = 0usize;
    for doc in &docs {
        if clean_document(doc, &cfg).kept {
            kept += 1;
        }
    }
    let secs = timer.elapsed().as_secs_f64();
    let mb_s = (total as f64 / 1_048_576.0) / secs;
    let line = format!(
        "{} docs, {:.0} MB in {:.2}s = {:.1} MB/s single worker, {} kept",
        docs.len(),
        total as f64 / 1_048_576.0,
        secs,
        mb_s,
        kept
    );
    if mb_s < 20.0 {
        println!("WARN cleaning throughput below 20 MB/s target: {line}");
    } else {
        pass("cleaning throughput", start, &line);
    }
}
