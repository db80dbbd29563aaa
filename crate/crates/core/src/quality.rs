//! Corpus quality evaluation: train a character n-gram probe language
//! model on a sample of a preprocessed corpus and compare preprocessing
//! configurations by perplexity on a fixed high-quality dev set. Lower
//! perplexity wins. Also: seeded sampling for manual review.
//!
//! The probe is a deliberately small stand-in for a neural model; only
//! the comparison contract (lower PPL is better data) carries over, not
//! absolute perplexity values.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::Error;

/// Sequence-start sentinel used to pad contexts. Control scalars never
/// survive cleaning, so this cannot collide with corpus text.
const BOS: char = '\u{0002}';

/// Smoothing scheme for the probe model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Smoothing {
    /// Additive smoothing over vocab + UNK. `k = 0` is the unsmoothed
    /// model, which errors on unseen events.
    AddK { k: f64 },
    /// Fixed-discount backoff to shorter contexts; unigram base level
    /// is add-1 over vocab + UNK so every score is positive.
    StupidBackoff { lambda: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::StupidBackoff { lambda: 0.4 }
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<char, u64>,
}

/// Character-level n-gram language model with closed vocabulary + UNK.
#[derive(Debug, Clone)]
pub struct NGramLm {
    pub order: usize,
    pub smoothing: Smoothing,
    /// counts per level: levels[m] holds (m+1)-gram counts, i.e. maps a
    /// length-m context to its next-character counts.
    levels: Vec<HashMap<String, ContextCounts>>,
    vocab: BTreeSet<char>,
}

/// Map out-of-vocabulary characters to a reserved UNK scalar.
const UNK: char = '\u{0003}';

impl NGramLm {
    /// Count n-grams over the corpus, one document at a time, each
    /// padded with `order-1` start sentinels. Deterministic.
    pub fn train(corpus: &[String], order: usize, smoothing: Smoothing) -> Result<Self, Error> {
        if order < 1 {
            return Err(Error::Config("n-gram order must be >= 1".into()));
        }
        if corpus.is_empty() || corpus.iter().all(|d| d.is_empty()) {
            return Err(Error::Config("training corpus is empty".into()));
        }
        let mut vocab = BTreeSet::new();
        let mut levels: Vec<HashMap<String, ContextCounts>> = vec![HashMap::new(); order];
        let mut padded: Vec<char> = Vec::new();
        for doc in corpus {
            if doc.is_empty() {
                continue;
            }
            padded.clear();
            padded.extend(std::iter::repeat_n(BOS, order - 1));
            padded.extend(doc.chars());
            for (pos, &c) in padded.iter().enumerate().skip(order - 1) {
                vocab.insert(c);
                for (m, level) in levels.iter_mut().enumerate() {
                    let ctx: String = padded[pos - m..pos].iter().collect();
                    let slot = level.entry(ctx).or_default();
                    slot.total += 1;
                    *slot.next.entry(c).or_insert(0) += 1;
                }
            }
        }
        Ok(NGramLm { order, smoothing, levels, vocab })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &BTreeSet<char> {
        &self.vocab
    }

    fn map_unk(&self, c: char) -> char {
        if self.vocab.contains(&c) {
            c
        } else {
            UNK
        }
    }

    /// P(token | context) under the configured smoothing. The context is
    /// the last `order-1` characters (BOS-padded). Events range over
    /// vocab + UNK.
    pub fn prob(&self, context: &[char], token: char) -> Result<f64, Error> {
        let token = self.map_unk(token);
        let ctx_len = self.order - 1;
        let mut ctx: Vec<char> = Vec::with_capacity(ctx_len);
        if context.len() < ctx_len {
            ctx.extend(std::iter::repeat_n(BOS, ctx_len - context.len()));
            ctx.extend(context.iter().map(|&c| self.map_unk(c)));
        } else {
            ctx.extend(context[context.len() - ctx_len..].iter().map(|&c| self.map_unk(c)));
        }

        match self.smoothing {
            Smoothing::AddK { k } => {
                let key: String = ctx.iter().collect();
                let events = (self.vocab.len() + 1) as f64; // vocab + UNK
                let (count, total) = match self.levels[ctx_len].get(&key) {
                    Some(slot) => (slot.next.get(&token).copied().unwrap_or(0), slot.total),
                    None => (0, 0),
                };
                let p = (count as f64 + k) / (total as f64 + k * events);
                if p <= 0.0 || !p.is_finite() {
                    return Err(Error::ZeroProbability {
                        context: key,
                        token,
                    });
                }
                Ok(p)
            }
            Smoothing::StupidBackoff { lambda } => {
                // highest-order non-zero count wins, discounted by
                // lambda per backoff step; unigram base is add-1.
                let mut discount = 1.0;
                for m in (1..=ctx_len).rev() {
                    let key: String = ctx[ctx_len - m..].iter().collect();
                    if let Some(slot) = self.levels[m].get(&key) {
                        if let Some(&c) = slot.next.get(&token) {
                            if c > 0 {
                                return Ok(discount * c as f64 / slot.total as f64);
                            }
                        }
                    }
                    discount *= lambda;
                }
                let base = self.levels[0].get("").expect("unigram level exists");
                let events = (self.vocab.len() + 1) as f64;
                let count = base.next.get(&token).copied().unwrap_or(0);
                Ok(discount * (count as f64 + 1.0) / (base.total as f64 + events))
            }
        }
    }

    /// Sum of conditional probabilities over vocab + UNK for a seen
    /// context; 1 within float tolerance in add-k mode.
    pub fn normalization_mass(&self, context: &[char]) -> Result<f64, Error> {
        let mut mass = 0.0;
        for &c in &self.vocab {
            mass += self.prob(context, c)?;
        }
        mass += self.prob(context, UNK)?;
        Ok(mass)
    }

    // -- model file: checksummed envelope, ordered JSON payload -------

    const MAGIC: &'static [u8; 4] = b"ZPLM";
    const VERSION: u32 = 1;
    const CHECKSUM_SEED: u64 = 0x6c_6d73_756d;

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        use crate::hashing::hash64;
        let mut ordered_levels: Vec<BTreeMap<String, BTreeMap<char, u64>>> = Vec::new();
        for level in &self.levels {
            let mut out: BTreeMap<String, BTreeMap<char, u64>> = BTreeMap::new();
            for (ctx, counts) in level {
                out.insert(ctx.clone(), counts.next.iter().map(|(&c, &n)| (c, n)).collect());
            }
            ordered_levels.push(out);
        }
        let payload = serde_json::to_vec(&LmFile {
            order: self.order,
            smoothing: self.smoothing,
            vocab: self.vocab.iter().collect::<String>(),
            levels: ordered_levels,
        })
        .map_err(|e| Error::io_other(path, e.to_string()))?;

        let mut buf = Vec::with_capacity(payload.len() + 16);
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.extend_from_slice(&payload);
        let checksum = hash64(&buf, Self::CHECKSUM_SEED);
        buf.extend_from_slice(&checksum.to_le_bytes());
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        use crate::hashing::hash64;
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if buf.len() < 16 || &buf[..4] != Self::MAGIC {
            return Err(Error::Model(format!("{}: not a probe model file", path.display())));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != Self::VERSION {
            return Err(Error::Model(format!(
                "{}: unsupported probe model version {version}",
                path.display()
            )));
        }
        let (body, tail) = buf.split_at(buf.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        if hash64(body, Self::CHECKSUM_SEED) != stored {
            return Err(Error::Model(format!("{}: probe model checksum mismatch", path.display())));
        }
        let file: LmFile = serde_json::from_slice(&body[8..])
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        let mut levels: Vec<HashMap<String, ContextCounts>> = Vec::with_capacity(file.order);
        for level in file.levels {
            let mut out: HashMap<String, ContextCounts> = HashMap::new();
            for (ctx, counts) in level {
                let total = counts.values().sum();
                out.insert(ctx, ContextCounts { total, next: counts.into_iter().collect() });
            }
            levels.push(out);
        }
        if levels.len() != file.order {
            return Err(Error::Model(format!("{}: level count mismatch", path.display())));
        }
        Ok(NGramLm {
            order: file.order,
            smoothing: file.smoothing,
            levels,
            vocab: file.vocab.chars().collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LmFile {
    order: usize,
    smoothing: Smoothing,
    vocab: String,
    levels: Vec<BTreeMap<String, BTreeMap<char, u64>>>,
}

/// exp of the average negative log-probability per character over the
/// dev corpus, documents BOS-padded, out-of-vocab characters mapped to
/// UNK. Per-document sums run in parallel; the final reduction is a
/// pairwise sum so results do not depend on thread scheduling.
pub fn perplexity(lm: &NGramLm, dev: &[String]) -> Result<f64, Error> {
    if dev.is_empty() || dev.iter().all(|d| d.is_empty()) {
        return Err(Error::Config("dev corpus is empty".into()));
    }
    let per_doc: Vec<Result<(f64, usize), Error>> = dev
        .par_iter()
        .filter(|d| !d.is_empty())
        .map(|doc| {
            let chars: Vec<char> = doc.chars().collect();
            let mut log_sum = 0.0;
            for (i, &c) in chars.iter().enumerate() {
                let start = i.saturating_sub(lm.order - 1);
                let p = lm.prob(&chars[start..i], c)?;
                log_sum += p.ln();
            }
            Ok((log_sum, chars.len()))
        })
        .collect();

    let mut sums = Vec::with_capacity(per_doc.len());
    let mut tokens = 0usize;
    for item in per_doc {
        let (s, t) = item?;
        sums.push(s);
        tokens += t;
    }
    let total = pairwise_sum(&sums);
    Ok((-total / tokens as f64).exp())
}

/// Pairwise (cascade) summation; bounds float drift independent of
/// input length.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Which preprocessing arm produced better (lower-PPL) data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Better {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareVerdict {
    pub better: Better,
    pub ppl_a: f64,
    pub ppl_b: f64,
}

/// Probe parameters for a comparison run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeParams {
    pub order: usize,
    pub smoothing: Smoothing,
    /// Relative PPL difference below which the arms tie.
    pub tie_relative: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams { order: 3, smoothing: Smoothing::default(), tie_relative: 0.001 }
    }
}

/// Train one probe per corpus with identical parameters and compare dev
/// perplexities. Antisymmetric by construction.
pub fn compare_configs(
    corpus_a: &[String],
    corpus_b: &[String],
    dev: &[String],
    probe: &ProbeParams,
) -> Result<CompareVerdict, Error> {
    let lm_a = NGramLm::train(corpus_a, probe.order, probe.smoothing)?;
    let lm_b = NGramLm::train(corpus_b, probe.order, probe.smoothing)?;
    let ppl_a = perplexity(&lm_a, dev)?;
    let ppl_b = perplexity(&lm_b, dev)?;
    let rel = (ppl_a - ppl_b).abs() / ppl_a.min(ppl_b);
    let better = if rel < probe.tie_relative {
        Better::Tie
    } else if ppl_a < ppl_b {
        Better::A
    } else {
        Better::B
    };
    Ok(CompareVerdict { better, ppl_a, ppl_b })
}

/// One manual-review row: excerpt plus blank rubric fields for the
/// annotator (smoothness 1-5, low-quality-content flags).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewItem {
    pub doc_id: String,
    pub excerpt: String,
    pub smoothness: String,
    pub advertisement: String,
    pub repeated_short_sentences: String,
    pub spam: String,
}

const EXCERPT_CHARS: usize = 500;

/// Seeded uniform sample without replacement, emitted with blank rubric
/// fields. `n` must not exceed the corpus size.
pub fn sample_for_manual_review(
    corpus: &[Document],
    n: usize,
    seed: u64,
) -> Result<Vec<ReviewItem>, Error> {
    if n > corpus.len() {
        return Err(Error::Config(format!(
            "review sample of {n} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut idx: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(n);
    Ok(idx
        .into_iter()
        .map(|i| {
            let doc = &corpus[i];
            ReviewItem {
                doc_id: doc.id.clone(),
                excerpt: doc.text.chars().take(EXCERPT_CHARS).collect(),
                smoothness: String::new(),
                advertisement: String::new(),
                repeated_short_sentences: String::new(),
                spam: String::new(),
            }
        })
        .collect())
}

/// Write review items as JSONL.
pub fn write_review_file(items: &[ReviewItem], path: &Path) -> Result<(), Error> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| Error::io_other(path, e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use rand::Rng;

    #[test]
    fn unigram_symmetry_under_add0() {
        let lm = NGramLm::train(&["ab".into()], 1, Smoothing::AddK { k: 0.0 }).unwrap();
        let pa = lm.prob(&[], 'a').unwrap();
        let pb = lm.prob(&[], 'b').unwrap();
        assert!((pa - pb).abs() < 1e-15);
        assert!((pa - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_counted_bigram_probabilities() {
        // corpus "aaab": bigrams aa, aa, ab -> P(a|a)=2/3, P(b|a)=1/3
        let lm = NGramLm::train(&["aaab".into()], 2, Smoothing::AddK { k: 0.0 }).unwrap();
        assert!((lm.prob(&['a'], 'a').unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((lm.prob(&['a'], 'b').unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = vec!["天地玄黄".to_string(), "宇宙洪荒".to_string()];
        let a = NGramLm::train(&corpus, 3, Smoothing::default()).unwrap();
        let b = NGramLm::train(&corpus, 3, Smoothing::default()).unwrap();
        assert_eq!(a.vocab, b.vocab);
        let ctx = ['天'];
        assert_eq!(a.prob(&ctx, '地').unwrap(), b.prob(&ctx, '地').unwrap());
    }

    #[test]
    fn order_zero_is_error() {
        assert!(NGramLm::train(&["ab".into()], 0, Smoothing::default()).is_err());
    }

    #[test]
    fn add0_unseen_event_is_zero_probability_error() {
        let lm = NGramLm::train(&["aaab".into()], 2, Smoothing::AddK { k: 0.0 }).unwrap();
        let err = perplexity(&lm, &["ba".into()]);
        assert!(matches!(err, Err(Error::ZeroProbability { .. })));
    }

    #[test]
    fn uniform_model_ppl_is_vocab_size() {
        // 4 distinct chars, each appearing once, order 1, no smoothing:
        // P = 1/4 everywhere, so PPL = 4 on any in-vocab dev text
        let lm = NGramLm::train(&["abcd".into()], 1, Smoothing::AddK { k: 0.0 }).unwrap();
        assert_eq!(lm.vocab_size(), 4);
        let ppl = perplexity(&lm, &["dcba".into(), "aabb".into()]).unwrap();
        assert!((ppl - 4.0).abs() < 1e-9, "ppl {ppl}");
    }

    #[test]
    fn single_token_vocab_ppl_is_one() {
        let lm = NGramLm::train(&["aaaa".into()], 1, Smoothing::AddK { k: 0.0 }).unwrap();
        let ppl = perplexity(&lm, &["aaa".into()]).unwrap();
        assert!((ppl - 1.0).abs() < 1e-12);
    }

    #[test]
    fn addk_conditionals_sum_to_one() {
        let corpus = vec!["寒来暑往秋收冬藏".to_string(), "闰余成岁律吕调阳".to_string()];
        let lm = NGramLm::train(&corpus, 2, Smoothing::AddK { k: 0.5 }).unwrap();
        for &c in lm.vocab().iter() {
            let mass = lm.normalization_mass(&[c]).unwrap();
            assert!((mass - 1.0).abs() < 1e-9, "context {c}: mass {mass}");
        }
        // unseen context also normalizes
        let mass = lm.normalization_mass(&['字']).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stupid_backoff_scores_are_positive() {
        let lm = NGramLm::train(&["天地玄黄".into()], 3, Smoothing::default()).unwrap();
        for probe in ['天', '黄', '未'] {
            let p = lm.prob(&['玄'], probe).unwrap();
            assert!(p > 0.0);
        }
    }

    #[test]
    fn ppl_bounds_for_addk_on_in_vocab_dev() {
        let corpus = vec!["金生丽水玉出昆冈剑号巨阙珠称夜光".to_string()];
        let lm = NGramLm::train(&corpus, 2, Smoothing::AddK { k: 1.0 }).unwrap();
        let ppl = perplexity(&lm, &corpus).unwrap();
        let v = lm.vocab_size() as f64;
        assert!(ppl >= 1.0 && ppl <= v + 1.0, "ppl {ppl} vocab {v}");
    }

    #[test]
    fn training_set_advantage() {
        let train = vec!["春眠不觉晓处处闻啼鸟夜来风雨声花落知多少".to_string()];
        let held_out = vec!["白日依山尽黄河入海流欲穷千里目更上一层楼".to_string()];
        let lm = NGramLm::train(&train, 2, Smoothing::AddK { k: 0.1 }).unwrap();
        let on_train = perplexity(&lm, &train).unwrap();
        let on_held = perplexity(&lm, &held_out).unwrap();
        assert!(on_train <= on_held, "train {on_train} vs held-out {on_held}");
    }

    fn noisy_copy(corpus: &[String], noise_fraction: f64, seed: u64) -> Vec<String> {
        // replace a fraction of lines with random characters
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        corpus
            .iter()
            .map(|line| {
                if rng.random::<f64>() < noise_fraction {
                    let len = line.chars().count().max(4);
                    (0..len)
                        .map(|_| char::from_u32(rng.random_range(0x4E00..0x9FA0)).unwrap())
                        .collect()
                } else {
                    line.clone()
                }
            })
            .collect()
    }

    fn fluent_lines() -> Vec<String> {
        let base = [
            "今天的天气很好，我们一起去公园散步。",
            "他认真地读完了这本书，觉得收获很大。",
            "学习语言需要长期的积累和不断的练习。",
            "春天来了，花园里的花都开了。",
            "科学研究需要严谨的态度和扎实的基础。",
            "我们在图书馆里安静地看书学习。",
            "城市的夜景在灯光下显得格外美丽。",
            "孩子们在操场上开心地跑来跑去。",
        ];
        (0..200).map(|i| base[i % base.len()].to_string()).collect()
    }

    #[test]
    fn compare_prefers_clean_arm_over_noisy() {
        let clean = fluent_lines();
        let noisy = noisy_copy(&clean, 0.3, 17);
        let dev: Vec<String> = fluent_lines().into_iter().take(40).collect();
        let verdict = compare_configs(&clean, &noisy, &dev, &ProbeParams::default()).unwrap();
        assert_eq!(verdict.better, Better::A, "ppl {} vs {}", verdict.ppl_a, verdict.ppl_b);
    }

    #[test]
    fn compare_identical_arms_tie() {
        let corpus = fluent_lines();
        let dev: Vec<String> = corpus.iter().take(20).cloned().collect();
        let verdict = compare_configs(&corpus, &corpus, &dev, &ProbeParams::default()).unwrap();
        assert_eq!(verdict.better, Better::Tie);
        assert_eq!(verdict.ppl_a, verdict.ppl_b);
    }

    #[test]
    fn compare_is_antisymmetric() {
        let clean = fluent_lines();
        let noisy = noisy_copy(&clean, 0.3, 23);
        let dev: Vec<String> = fluent_lines().into_iter().take(30).collect();
        let ab = compare_configs(&clean, &noisy, &dev, &ProbeParams::default()).unwrap();
        let ba = compare_configs(&noisy, &clean, &dev, &ProbeParams::default()).unwrap();
        assert_eq!(ab.ppl_a, ba.ppl_b);
        assert_eq!(ab.ppl_b, ba.ppl_a);
        match ab.better {
            Better::A => assert_eq!(ba.better, Better::B),
            Better::B => assert_eq!(ba.better, Better::A),
            Better::Tie => assert_eq!(ba.better, Better::Tie),
        }
    }

    fn docs(n: usize) -> Vec<Document> {
        (0..n)
            .map(|i| Document::new(Source::News, &format!("第{i}篇评审文档的内容。")))
            .collect()
    }

    #[test]
    fn review_sample_full_corpus_is_permutation() {
        let corpus = docs(25);
        let sample = sample_for_manual_review(&corpus, 25, 3).unwrap();
        let ids: BTreeSet<&String> = sample.iter().map(|r| &r.doc_id).collect();
        assert_eq!(ids.len(), 25);
    }

    #[test]
    fn review_sample_is_seed_deterministic() {
        let corpus = docs(50);
        let a = sample_for_manual_review(&corpus, 10, 7).unwrap();
        let b = sample_for_manual_review(&corpus, 10, 7).unwrap();
        let ids = |v: &[ReviewItem]| v.iter().map(|r| r.doc_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn review_sample_oversized_is_error() {
        let corpus = docs(5);
        assert!(sample_for_manual_review(&corpus, 6, 1).is_err());
    }

    #[test]
    fn review_overlap_matches_hypergeometric_expectation() {
        // two disjoint seeds on a large corpus overlap ~ n^2/N
        let corpus = docs(1000);
        let n = 100;
        let mut total_overlap = 0usize;
        let trials = 40;
        for t in 0..trials {
            let a = sample_for_manual_review(&corpus, n, 2 * t).unwrap();
            let b = sample_for_manual_review(&corpus, n, 2 * t + 1).unwrap();
            let set: BTreeSet<&String> = a.iter().map(|r| &r.doc_id).collect();
            total_overlap += b.iter().filter(|r| set.contains(&r.doc_id)).count();
        }
        let mean = total_overlap as f64 / trials as f64;
        let expected = (n * n) as f64 / 1000.0; // 10
        assert!((mean - expected).abs() < 3.0, "mean overlap {mean}, expected ~{expected}");
    }

    #[test]
    fn probe_model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probe.lm");
        let corpus = vec!["天地玄黄宇宙洪荒".to_string(), "日月盈昃辰宿列张".to_string()];
        let lm = NGramLm::train(&corpus, 3, Smoothing::default()).unwrap();
        lm.save(&path).unwrap();
        let back = NGramLm::load(&path).unwrap();
        assert_eq!(back.order, lm.order);
        assert_eq!(back.vocab, lm.vocab);
        let dev = vec!["天地日月".to_string()];
        assert_eq!(perplexity(&lm, &dev).unwrap(), perplexity(&back, &dev).unwrap());

        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x20;
        std::fs::write(&path, &bytes).unwrap();
        assert!(NGramLm::load(&path).is_err());
    }

    #[test]
    fn review_excerpt_is_bounded() {
        let long = "很".repeat(2000);
        let doc = Document::new(Source::Ebooks, &long);
        let sample = sample_for_manual_review(&[doc], 1, 1).unwrap();
        assert_eq!(sample[0].excerpt.chars().count(), 500);
        assert!(sample[0].smoothness.is_empty());
    }
}
