//! Stage implementations. Each stage reads the previous stage's shards,
//! writes its own (shard i in maps to shard i out, so reruns are
//! byte-identical for a fixed seed), appends dropped documents to a
//! per-stage drop report, and returns counters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use zhpipe_core::bpe::{count_tokens, train_bpe, BpeModel, CharTokenizer, Tokenizer};
use zhpipe_core::classifier::{FeatureParams, LinearTextClassifier, TrainParams};
use zhpipe_core::clean::clean_document;
use zhpipe_core::corpus::{
    ingest_jsonl, read_manifest, read_shard, strip_labels, write_shard, Document, ErrorPolicy,
    Source,
};
use zhpipe_core::dedup::deduplicate;
use zhpipe_core::filter::{quality_filter, sensitive_filter, spam_filter, SensitiveLexicon};
use zhpipe_core::hashing::derive_seed;
use zhpipe_core::mix::{compute_epochs, mix_report, sample_stream, validate_mix, MixSpec};
use zhpipe_core::quality::{
    compare_configs, perplexity, sample_for_manual_review, write_review_file, NGramLm,
    ProbeParams,
};

use crate::config::{resolve, PipelineConfig};
use crate::report::{CorpusStats, PipelineReport, SourceStats, StageReport};
use crate::{CliError, Stage};

const STAGE_DIRS: &[(Stage, &str)] = &[
    (Stage::Ingest, "01-ingest"),
    (Stage::Clean, "02-clean"),
    (Stage::Filter, "03-filter"),
    (Stage::Dedup, "04-dedup"),
    (Stage::Eval, "05-eval"),
    (Stage::Mix, "06-mix"),
];

/// Everything a run needs: parsed config, config-file directory for
/// relative paths, and the resolved output directory.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub base: PathBuf,
    pub out_dir: PathBuf,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, base: PathBuf) -> Self {
        let out_dir = resolve(&base, &config.io.output_dir);
        Pipeline { config, base, out_dir }
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        let name = STAGE_DIRS
            .iter()
            .find(|(s, _)| *s == stage)
            .map(|(_, n)| *n)
            .expect("stage has a directory");
        self.out_dir.join(name)
    }

    fn upstream_of(stage: Stage) -> Stage {
        match stage {
            Stage::Clean => Stage::Ingest,
            Stage::Filter => Stage::Clean,
            Stage::Dedup => Stage::Filter,
            Stage::Eval | Stage::Mix => Stage::Dedup,
            _ => unreachable!("stage {stage:?} has no single upstream"),
        }
    }

    /// The newest stage directory that exists; used by `stats`.
    pub fn latest_stage_dir(&self) -> Option<(Stage, PathBuf)> {
        [Stage::Dedup, Stage::Filter, Stage::Clean, Stage::Ingest]
            .into_iter()
            .map(|s| (s, self.stage_dir(s)))
            .find(|(_, d)| d.is_dir())
    }

    fn upstream_shards(&self, stage: Stage) -> Result<Vec<(usize, PathBuf)>, CliError> {
        let upstream = Self::upstream_of(stage);
        let dir = self.stage_dir(upstream);
        if !dir.is_dir() {
            return Err(CliError::MissingUpstream(
                dir.display().to_string(),
                upstream.as_str().to_string(),
            ));
        }
        list_shards(&dir)
    }

    /// Run one stage (or the whole pipeline) and collect reports.
    pub fn run(&self, stage: Stage) -> Result<PipelineReport, CliError> {
        let workers = self.config.workers;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| self.run_inner(stage))
    }

    fn run_inner(&self, stage: Stage) -> Result<PipelineReport, CliError> {
        let mut report = PipelineReport::default();
        match stage {
            Stage::Ingest => report.stages.push(self.run_ingest()?),
            Stage::Clean => report.stages.push(self.run_clean()?),
            Stage::Filter => report.stages.push(self.run_filter()?),
            Stage::Dedup => report.stages.push(self.run_dedup()?),
            Stage::Eval => report.eval = Some(self.run_eval()?),
            Stage::Mix => report.mix = Some(self.run_mix()?),
            Stage::Stats => report.stats = Some(self.run_stats()?),
            Stage::All => {
                report.stages.push(self.run_ingest()?);
                report.stages.push(self.run_clean()?);
                report.stages.push(self.run_filter()?);
                report.stages.push(self.run_dedup()?);
                report.eval = Some(self.run_eval()?);
                report.mix = Some(self.run_mix()?);
                report.stats = Some(self.run_stats()?);
            }
        }
        Ok(report)
    }

    // -- ingest ---------------------------------------------------------

    fn run_ingest(&self) -> Result<StageReport, CliError> {
        let started = Instant::now();
        let dir = self.stage_dir(Stage::Ingest);
        reset_dir(&dir)?;

        let mut docs: Vec<Document> = Vec::new();
        let mut skipped = 0u64;
        let mut bytes_in = 0u64;
        for source in Source::ALL {
            let Some(inputs) = self.config.io.inputs.get(&source) else { continue };
            let text_fields = self.config.io.text_fields.get(&source);
            for input in inputs {
                let input = resolve(&self.base, input);
                for file in expand_input(&input)? {
                    bytes_in += std::fs::metadata(&file).map(|m| m.len()).unwrap_or(0);
                    match text_fields {
                        Some(fields) => {
                            let (parsed, s) = ingest_labeled(
                                &file,
                                source,
                                fields,
                                self.config.ingest.error_policy,
                            )?;
                            skipped += s;
                            docs.extend(parsed);
                        }
                        None => {
                            let (parsed, stats) =
                                ingest_jsonl(&file, source, self.config.ingest.error_policy)?;
                            skipped += stats.skipped as u64;
                            docs.extend(parsed);
                        }
                    }
                }
            }
        }

        let docs_total = docs.len() as u64;
        let shards: Vec<Vec<Document>> = docs
            .chunks(self.config.io.shard_size.max(1))
            .map(<[Document]>::to_vec)
            .collect();
        let bytes_out = write_stage_shards(&dir, &shards)?;

        Ok(finish_report(
            "ingest",
            docs_total,
            docs_total,
            BTreeMap::new(),
            skipped,
            bytes_in,
            bytes_out,
            started,
        ))
    }

    // -- clean ----------------------------------------------------------

    fn run_clean(&self) -> Result<StageReport, CliError> {
        let started = Instant::now();
        let shards = self.upstream_shards(Stage::Clean)?;
        let dir = self.stage_dir(Stage::Clean);
        reset_dir(&dir)?;
        let cfg = self.config.clean.to_core(&self.base)?;

        let processed: Vec<(usize, Vec<Document>, Vec<Document>, u64)> = shards
            .par_iter()
            .map(|(idx, path)| -> Result<_, CliError> {
                let bytes = read_manifest(path)?.byte_count as u64;
                let docs = read_shard(path)?;
                let mut kept = Vec::with_capacity(docs.len());
                let mut dropped = Vec::new();
                for doc in &docs {
                    let outcome = clean_document(doc, &cfg);
                    if outcome.kept {
                        kept.push(outcome.doc);
                    } else {
                        dropped.push(outcome.doc);
                    }
                }
                Ok((*idx, kept, dropped, bytes))
            })
            .collect::<Result<_, _>>()?;

        self.write_processed("clean", &dir, processed, started)
    }

    // -- filter ---------------------------------------------------------

    fn run_filter(&self) -> Result<StageReport, CliError> {
        let started = Instant::now();
        let shards = self.upstream_shards(Stage::Filter)?;
        let dir = self.stage_dir(Stage::Filter);
        reset_dir(&dir)?;

        let fcfg = &self.config.filter;
        let t2s = match &self.config.clean.t2s_table {
            Some(path) => zhpipe_core::lexicon::T2sTable::load(&resolve(&self.base, path))?,
            None => zhpipe_core::lexicon::bundled_t2s().clone(),
        };
        let lexicon = if fcfg.sensitive_enabled {
            Some(match &fcfg.sensitive_lexicon {
                Some(path) => SensitiveLexicon::load(&resolve(&self.base, path), &t2s)?,
                None => SensitiveLexicon::bundled(&t2s),
            })
        } else {
            None
        };
        let spam_model = self.acquire_model("spam", &fcfg.spam, derive_seed(self.config.seed, 101))?;
        let quality_model =
            self.acquire_model("quality", &fcfg.quality, derive_seed(self.config.seed, 102))?;

        let processed: Vec<(usize, Vec<Document>, Vec<Document>, u64)> = shards
            .par_iter()
            .map(|(idx, path)| -> Result<_, CliError> {
                let bytes = read_manifest(path)?.byte_count as u64;
                let docs = read_shard(path)?;
                let mut kept = Vec::with_capacity(docs.len());
                let mut dropped = Vec::new();
                for mut doc in docs {
                    if let Some(lex) = &lexicon {
                        let verdict = sensitive_filter(&doc, lex, fcfg.max_distinct_sensitive);
                        if verdict.is_drop() {
                            doc.push_verdict(verdict);
                            dropped.push(doc);
                            continue;
                        }
                    }
                    if let Some(model) = &spam_model {
                        let verdict = spam_filter(&doc, model, fcfg.spam_threshold);
                        if verdict.is_drop() {
                            doc.push_verdict(verdict);
                            dropped.push(doc);
                            continue;
                        }
                    }
                    if let Some(model) = &quality_model {
                        // keep verdicts too: the score feeds evaluation loops
                        let verdict = quality_filter(&doc, model, fcfg.quality_threshold);
                        let is_drop = verdict.is_drop();
                        doc.push_verdict(verdict);
                        if is_drop {
                            dropped.push(doc);
                            continue;
                        }
                    }
                    kept.push(doc);
                }
                Ok((*idx, kept, dropped, bytes))
            })
            .collect::<Result<_, _>>()?;

        self.write_processed("filter", &dir, processed, started)
    }

    /// Load a classifier from its file, or train one from the configured
    /// corpora and save it. Returns None when the model is unconfigured.
    fn acquire_model(
        &self,
        name: &str,
        source: &crate::config::ModelSource,
        seed: u64,
    ) -> Result<Option<LinearTextClassifier>, CliError> {
        if !source.configured() {
            return Ok(None);
        }
        let model_path = match &source.path {
            Some(p) => resolve(&self.base, p),
            None => {
                let dir = self.out_dir.join("models");
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                dir.join(format!("{name}.bin"))
            }
        };
        if model_path.is_file() {
            return Ok(Some(LinearTextClassifier::load(&model_path)?));
        }
        let (Some(pos_path), Some(neg_path)) = (&source.train_positive, &source.train_negative)
        else {
            return Err(CliError::Config(format!(
                "{name} model file {} does not exist and no training data is configured",
                model_path.display()
            )));
        };
        let read_texts = |p: &Path| -> Result<Vec<String>, CliError> {
            let (docs, _) = ingest_jsonl(p, Source::CommonCrawl, ErrorPolicy::Skip)?;
            Ok(docs.into_iter().map(|d| d.text).collect())
        };
        let pos = read_texts(&resolve(&self.base, pos_path))?;
        let neg = read_texts(&resolve(&self.base, neg_path))?;
        let hyper = TrainParams {
            epochs: source.epochs,
            learning_rate: source.learning_rate,
            features: FeatureParams {
                dim: 1usize << source.dim_log2,
                ngram_orders: source.ngram_orders.clone(),
                hash_seed: derive_seed(seed, 7),
            },
            seed,
            validation_fraction: 0.1,
        };
        let outcome = LinearTextClassifier::train(&pos, &neg, &hyper)?;
        if let Some(parent) = model_path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        outcome.model.save(&model_path)?;
        Ok(Some(outcome.model))
    }

    // -- dedup ----------------------------------------------------------

    fn run_dedup(&self) -> Result<StageReport, CliError> {
        let started = Instant::now();
        let shards = self.upstream_shards(Stage::Dedup)?;
        let dir = self.stage_dir(Stage::Dedup);
        reset_dir(&dir)?;

        let mut bytes_in = 0u64;
        let mut all_docs: Vec<Document> = Vec::new();
        let mut shard_by_id: std::collections::HashMap<String, usize> =
            std::collections::HashMap::new();
        let mut shard_count = 0usize;
        for (idx, path) in &shards {
            bytes_in += read_manifest(path)?.byte_count as u64;
            for doc in read_shard(path)? {
                shard_by_id.entry(doc.id.clone()).or_insert(*idx);
                all_docs.push(doc);
            }
            shard_count = shard_count.max(idx + 1);
        }
        let docs_in = all_docs.len() as u64;

        let params = self.config.dedup.to_core(derive_seed(self.config.seed, 11));
        let outcome = deduplicate(all_docs, &params)?;

        // survivors back into their original shard slots; survivors are
        // in input order, so within-shard order is preserved
        let mut shard_docs: Vec<Vec<Document>> = vec![Vec::new(); shard_count];
        for doc in &outcome.survivors {
            let shard_idx = shard_by_id[&doc.id];
            shard_docs[shard_idx].push(doc.clone());
        }
        let bytes_out = write_stage_shards(&dir, &shard_docs)?;
        write_drop_report(&dir, &outcome.dropped)?;

        let clusters_path = dir.join("clusters.jsonl");
        let mut cluster_lines = String::new();
        for cluster in &outcome.clusters {
            cluster_lines.push_str(
                &serde_json::to_string(cluster)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            );
            cluster_lines.push('\n');
        }
        std::fs::write(&clusters_path, cluster_lines)
            .map_err(|e| CliError::io(&clusters_path, e))?;

        let mut dropped_by_rule = BTreeMap::new();
        if !outcome.dropped.is_empty() {
            dropped_by_rule.insert("near_duplicate".to_string(), outcome.dropped.len() as u64);
        }
        Ok(finish_report(
            "dedup",
            docs_in,
            outcome.survivors.len() as u64,
            dropped_by_rule,
            0,
            bytes_in,
            bytes_out,
            started,
        ))
    }

    // -- eval -------------------------------------------------------------

    fn run_eval(&self) -> Result<serde_json::Value, CliError> {
        let dir = self.stage_dir(Stage::Eval);
        reset_dir(&dir)?;
        let corpus_docs = self.read_stage_documents(Stage::Dedup)?;
        if corpus_docs.is_empty() {
            return Ok(serde_json::json!({ "skipped": "empty corpus" }));
        }
        let ecfg = &self.config.eval;
        let Some(dev_path) = &ecfg.dev_path else {
            return Ok(serde_json::json!({ "skipped": "no dev_path configured" }));
        };
        let dev = read_plain_lines(&resolve(&self.base, dev_path))?;
        if dev.is_empty() {
            return Err(CliError::Config("dev set is empty".into()));
        }

        let sample = seeded_sample(&corpus_docs, ecfg.sample_docs, derive_seed(self.config.seed, 201));
        let texts: Vec<String> = sample.iter().map(|d| d.text.clone()).collect();
        let smoothing = ecfg.smoothing()?;
        let lm = NGramLm::train(&texts, ecfg.order, smoothing)?;
        let ppl = perplexity(&lm, &dev)?;

        let compare = match &ecfg.compare_with {
            Some(other_dir) => {
                let other_docs = read_dir_documents(&resolve(&self.base, other_dir))?;
                if other_docs.is_empty() {
                    return Err(CliError::Config(format!(
                        "compare_with directory {} has no documents",
                        other_dir.display()
                    )));
                }
                let other_sample =
                    seeded_sample(&other_docs, ecfg.sample_docs, derive_seed(self.config.seed, 201));
                let other_texts: Vec<String> =
                    other_sample.iter().map(|d| d.text.clone()).collect();
                let probe = ProbeParams { order: ecfg.order, smoothing, tie_relative: 0.001 };
                let verdict = compare_configs(&texts, &other_texts, &dev, &probe)?;
                Some(serde_json::json!({
                    "other_dir": other_dir.display().to_string(),
                    "better": verdict.better,
                    "ppl_self": verdict.ppl_a,
                    "ppl_other": verdict.ppl_b,
                }))
            }
            None => None,
        };

        let review_n = ecfg.review_sample.min(corpus_docs.len());
        let review =
            sample_for_manual_review(&corpus_docs, review_n, derive_seed(self.config.seed, 202))?;
        let review_path = dir.join("review.jsonl");
        write_review_file(&review, &review_path)?;

        let payload = serde_json::json!({
            "ppl": ppl,
            "probe_order": ecfg.order,
            "smoothing": smoothing,
            "probe_training_docs": texts.len(),
            "dev_docs": dev.len(),
            "vocab_size": lm.vocab_size(),
            "review_file": review_path.display().to_string(),
            "review_sample": review_n,
            "compare": compare,
        });
        write_json(&dir.join("eval.json"), &payload)?;
        Ok(payload)
    }

    // -- mix --------------------------------------------------------------

    fn run_mix(&self) -> Result<serde_json::Value, CliError> {
        let dir = self.stage_dir(Stage::Mix);
        reset_dir(&dir)?;
        let corpus_docs = self.read_stage_documents(Stage::Dedup)?;
        if corpus_docs.is_empty() {
            return Ok(serde_json::json!({ "skipped": "empty corpus" }));
        }
        let Some(spec_path) = &self.config.mix.spec_path else {
            return Ok(serde_json::json!({ "skipped": "no spec_path configured" }));
        };
        let spec = MixSpec::load(&resolve(&self.base, spec_path))?;
        let warnings = validate_mix(&spec, self.config.mix.epoch_cap)?;

        let mut sources: BTreeMap<Source, Vec<Document>> = BTreeMap::new();
        for doc in corpus_docs {
            sources.entry(doc.source).or_default().push(doc);
        }
        let stream = sample_stream(
            &sources,
            &spec,
            derive_seed(self.config.seed, 301),
            self.config.mix.n_draws,
        )?;

        let stream_path = dir.join("stream.jsonl");
        let mut lines = String::new();
        for (source, id) in &stream.draws {
            lines.push_str(&format!("{{\"source\":\"{source}\",\"doc_id\":\"{id}\"}}\n"));
        }
        std::fs::write(&stream_path, lines).map_err(|e| CliError::io(&stream_path, e))?;

        let tokenizer = self.acquire_tokenizer(&sources)?;
        let report = match &tokenizer {
            AnyTokenizer::Char(t) => {
                mix_report(&stream, &sources, t, self.config.tokenizer.histogram_bucket)?
            }
            AnyTokenizer::Bpe(t) => {
                mix_report(&stream, &sources, t, self.config.tokenizer.histogram_bucket)?
            }
        };
        let epochs = if spec.total_training_tokens > 0 {
            Some(compute_epochs(&spec)?)
        } else {
            None
        };

        let payload = serde_json::json!({
            "spec": spec,
            "warnings": warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "n_draws": stream.draws.len(),
            "seed": stream.seed,
            "realized_weights": stream.realized_weights,
            "per_source_tokens": report.per_source_tokens,
            "total_tokens": report.total_tokens,
            "mean_doc_tokens": report.mean_doc_len,
            "epochs": epochs,
            "stream_file": stream_path.display().to_string(),
        });
        write_json(&dir.join("mix.json"), &payload)?;
        Ok(payload)
    }

    // -- stats -------------------------------------------------------------

    fn run_stats(&self) -> Result<CorpusStats, CliError> {
        let Some((_, dir)) = self.latest_stage_dir() else {
            return Err(CliError::MissingUpstream(
                self.out_dir.display().to_string(),
                "ingest".to_string(),
            ));
        };
        let docs = read_dir_documents(&dir)?;
        let mut sources: BTreeMap<Source, Vec<Document>> = BTreeMap::new();
        for doc in docs {
            sources.entry(doc.source).or_default().push(doc);
        }
        let tokenizer = self.acquire_tokenizer(&sources)?;
        let bucket = self.config.tokenizer.histogram_bucket;

        let mut stats = CorpusStats { histogram_bucket: bucket, ..Default::default() };
        let mut all_lengths: BTreeMap<u64, u64> = BTreeMap::new();
        for (source, docs) in &sources {
            let texts: Vec<String> = docs.iter().map(|d| d.text.clone()).collect();
            let token_stats = match &tokenizer {
                AnyTokenizer::Char(t) => count_tokens(&texts, t, bucket),
                AnyTokenizer::Bpe(t) => count_tokens(&texts, t, bucket),
            };
            let bytes: u64 = docs.iter().map(|d| d.text.len() as u64).sum();
            stats.per_source.insert(
                *source,
                SourceStats {
                    docs: docs.len() as u64,
                    bytes,
                    tokens: token_stats.total,
                    mean_doc_tokens: token_stats.mean_doc_len,
                },
            );
            for (bucket_start, count) in token_stats.histogram {
                *all_lengths.entry(bucket_start).or_insert(0) += count;
            }
            stats.total_docs += docs.len() as u64;
            stats.total_bytes += bytes;
            stats.total_tokens += token_stats.total;
        }
        stats.mean_doc_tokens = if stats.total_docs == 0 {
            0.0
        } else {
            stats.total_tokens as f64 / stats.total_docs as f64
        };
        stats.histogram = all_lengths;
        write_json(&self.out_dir.join("stats.json"), &stats)?;
        Ok(stats)
    }

    /// Char tokenizer, or a BPE model loaded from (or trained to) the
    /// configured path.
    fn acquire_tokenizer(
        &self,
        sources: &BTreeMap<Source, Vec<Document>>,
    ) -> Result<AnyTokenizer, CliError> {
        let tcfg = &self.config.tokenizer;
        match tcfg.mode.as_str() {
            "char" => Ok(AnyTokenizer::Char(CharTokenizer)),
            "bpe" => {
                let path = match &tcfg.model_path {
                    Some(p) => resolve(&self.base, p),
                    None => {
                        let dir = self.out_dir.join("models");
                        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                        dir.join("bpe.model")
                    }
                };
                if path.is_file() {
                    return Ok(AnyTokenizer::Bpe(BpeModel::load(&path)?));
                }
                let corpus: Vec<String> = sources
                    .values()
                    .flat_map(|docs| docs.iter().map(|d| d.text.clone()))
                    .collect();
                if corpus.is_empty() {
                    return Err(CliError::Config(
                        "cannot train bpe tokenizer on an empty corpus".into(),
                    ));
                }
                let model = train_bpe(&corpus, tcfg.train_target_vocab)?;
                model.save(&path)?;
                Ok(AnyTokenizer::Bpe(model))
            }
            other => Err(CliError::Config(format!("unknown tokenizer mode {other:?}"))),
        }
    }

    fn read_stage_documents(&self, upstream: Stage) -> Result<Vec<Document>, CliError> {
        let dir = self.stage_dir(upstream);
        if !dir.is_dir() {
            return Err(CliError::MissingUpstream(
                dir.display().to_string(),
                upstream.as_str().to_string(),
            ));
        }
        read_dir_documents(&dir)
    }

    /// Write per-shard kept documents + drop report and build the stage
    /// report. `processed` is (shard idx, kept, dropped, bytes_in).
    fn write_processed(
        &self,
        stage: &str,
        dir: &Path,
        mut processed: Vec<(usize, Vec<Document>, Vec<Document>, u64)>,
        started: Instant,
    ) -> Result<StageReport, CliError> {
        processed.sort_by_key(|(idx, ..)| *idx);
        let mut docs_in = 0u64;
        let mut bytes_in = 0u64;
        let mut dropped_by_rule: BTreeMap<String, u64> = BTreeMap::new();
        let mut all_dropped = Vec::new();
        let mut shards = Vec::with_capacity(processed.len());
        for (_, kept, dropped, bytes) in processed {
            docs_in += (kept.len() + dropped.len()) as u64;
            bytes_in += bytes;
            for doc in &dropped {
                let rule = doc
                    .audit
                    .iter()
                    .rev()
                    .find(|v| v.is_drop())
                    .map(|v| v.rule_id.clone())
                    .unwrap_or_else(|| "unknown".to_string());
                *dropped_by_rule.entry(rule).or_insert(0) += 1;
            }
            all_dropped.extend(dropped);
            shards.push(kept);
        }
        let docs_out: u64 = shards.iter().map(|s| s.len() as u64).sum();
        let bytes_out = write_stage_shards(dir, &shards)?;
        write_drop_report(dir, &all_dropped)?;
        Ok(finish_report(stage, docs_in, docs_out, dropped_by_rule, 0, bytes_in, bytes_out, started))
    }
}

/// Tokenizer selection without trait objects (count_tokens is generic).
pub enum AnyTokenizer {
    Char(CharTokenizer),
    Bpe(BpeModel),
}

impl Tokenizer for AnyTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        match self {
            AnyTokenizer::Char(t) => t.encode(text),
            AnyTokenizer::Bpe(t) => t.encode(text),
        }
    }

    fn token_count(&self, text: &str) -> usize {
        match self {
            AnyTokenizer::Char(t) => t.token_count(text),
            AnyTokenizer::Bpe(t) => t.token_count(text),
        }
    }
}

// -- helpers --------------------------------------------------------------

fn reset_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(())
}

fn shard_name(idx: usize) -> String {
    format!("shard-{idx:05}.jsonl")
}

/// Sorted shard files in a stage directory, with their indices.
pub fn list_shards(dir: &Path) -> Result<Vec<(usize, PathBuf)>, CliError> {
    let mut shards = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(idx) = name
            .strip_prefix("shard-")
            .and_then(|rest| rest.strip_suffix(".jsonl"))
            .and_then(|num| num.parse::<usize>().ok())
        {
            shards.push((idx, entry.path()));
        }
    }
    shards.sort_by_key(|(idx, _)| *idx);
    Ok(shards)
}

/// Write shards (dense re-indexing: shard slot i keeps its position even
/// when empty, so upstream/downstream shard files stay aligned).
fn write_stage_shards(dir: &Path, shards: &[Vec<Document>]) -> Result<u64, CliError> {
    let mut bytes_out = 0u64;
    for (idx, docs) in shards.iter().enumerate() {
        let path = dir.join(shard_name(idx));
        let manifest = write_shard(docs, &path)?;
        bytes_out += manifest.byte_count as u64;
    }
    Ok(bytes_out)
}

fn write_drop_report(dir: &Path, dropped: &[Document]) -> Result<(), CliError> {
    let path = dir.join("dropped.jsonl");
    let mut out = String::new();
    for doc in dropped {
        out.push_str(&serde_json::to_string(doc).map_err(|e| CliError::Config(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(&path, out).map_err(|e| CliError::io(&path, e))
}

/// All documents in a stage directory, shard order.
pub fn read_dir_documents(dir: &Path) -> Result<Vec<Document>, CliError> {
    let mut docs = Vec::new();
    for (_, path) in list_shards(dir)? {
        docs.extend(read_shard(&path)?);
    }
    Ok(docs)
}

fn expand_input(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "jsonl"))
            .collect();
        files.sort();
        return Ok(files);
    }
    Err(CliError::Config(format!("input path {} does not exist", path.display())))
}

/// Ingest a labeled-dataset file: per line, the configured text fields
/// are concatenated and everything else is discarded.
fn ingest_labeled(
    path: &Path,
    source: Source,
    text_fields: &[String],
    policy: ErrorPolicy,
) -> Result<(Vec<Document>, u64), CliError> {
    let content = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut docs = Vec::new();
    let mut skipped = 0u64;
    for (line_no, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<serde_json::Value, _> = serde_json::from_str(line);
        let doc = parsed
            .map_err(|e| e.to_string())
            .and_then(|record| {
                strip_labels(&record, text_fields, source).map_err(|e| e.to_string())
            });
        match doc {
            Ok(doc) => docs.push(doc),
            Err(cause) => match policy {
                ErrorPolicy::Skip => skipped += 1,
                ErrorPolicy::Fail => {
                    return Err(CliError::Core(zhpipe_core::Error::MalformedLine {
                        path: path.to_path_buf(),
                        line: line_no + 1,
                        cause,
                    }))
                }
            },
        }
    }
    Ok((docs, skipped))
}

/// Plain text file, one document per line, blank lines skipped.
fn read_plain_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let content = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(content.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

/// Seeded sample without replacement of up to `n` documents.
fn seeded_sample(docs: &[Document], n: usize, seed: u64) -> Vec<Document> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut idx: Vec<usize> = (0..docs.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(n.min(docs.len()));
    idx.into_iter().map(|i| docs[i].clone()).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| CliError::io(path, e))
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    stage: &str,
    docs_in: u64,
    docs_out: u64,
    dropped_by_rule: BTreeMap<String, u64>,
    malformed_skipped: u64,
    bytes_in: u64,
    bytes_out: u64,
    started: Instant,
) -> StageReport {
    let wall_ms = started.elapsed().as_millis() as u64;
    let throughput_mb_s = if wall_ms == 0 {
        0.0
    } else {
        (bytes_in as f64 / 1_048_576.0) / (wall_ms as f64 / 1000.0)
    };
    StageReport {
        stage: stage.to_string(),
        docs_in,
        docs_out,
        dropped_by_rule,
        malformed_skipped,
        bytes_in,
        bytes_out,
        wall_ms,
        throughput_mb_s,
    }
}
