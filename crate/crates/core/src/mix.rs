//! Training-data selection: per-source token quantities and sampling
//! weights, derived epoch counts, and a seeded weighted sampler
//! producing the training stream.
//!
//! Weights are renormalized before sampling, so a spec whose printed
//! weights sum to 100.99% still samples a proper distribution; the
//! discrepancy is surfaced by [`validate_mix`] instead of being hidden.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bpe::Tokenizer;
use crate::corpus::{Document, Source};
use crate::error::Error;
use crate::hashing::derive_seed;

/// One source's row in the mix: how many tokens exist and what fraction
/// of training draws it should receive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub source: Source,
    pub quantity_tokens: u64,
    pub weight: f64,
}

/// The full sampling strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub entries: Vec<MixEntry>,
    #[serde(default)]
    pub total_training_tokens: u64,
}

impl MixSpec {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: MixSpec =
            toml::from_str(&content).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.validate_hard()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let content =
            toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, content).map_err(|e| Error::io(path, e))
    }

    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Structural invariants: non-negative weights, positive quantities,
    /// weight sum within the 1% tolerance.
    pub fn validate_hard(&self) -> Result<(), Error> {
        if self.entries.is_empty() {
            return Err(Error::Config("mix spec has no entries".into()));
        }
        for entry in &self.entries {
            if entry.weight < 0.0 {
                return Err(Error::Config(format!(
                    "negative weight {} for source {}",
                    entry.weight, entry.source
                )));
            }
            if entry.quantity_tokens == 0 {
                return Err(Error::Config(format!(
                    "quantity_tokens must be > 0 for source {}",
                    entry.source
                )));
            }
        }
        let sum = self.weight_sum();
        if !(0.99..=1.01).contains(&sum) {
            return Err(Error::Config(format!(
                "mix weights sum to {sum:.4}, outside the 1% tolerance"
            )));
        }
        Ok(())
    }
}

/// epochs(source) = weight * total_training_tokens / quantity_tokens.
pub fn compute_epochs(spec: &MixSpec) -> Result<BTreeMap<Source, f64>, Error> {
    let total = spec.total_training_tokens as f64;
    let mut out = BTreeMap::new();
    for entry in &spec.entries {
        if entry.quantity_tokens == 0 {
            return Err(Error::Config(format!(
                "quantity_tokens is 0 for source {}",
                entry.source
            )));
        }
        out.insert(entry.source, entry.weight * total / entry.quantity_tokens as f64);
    }
    Ok(out)
}

/// Non-fatal findings about a mix spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MixWarning {
    /// |sum - 1| exceeds 0.5%; the sampler will renormalize.
    WeightSumOff { sum: f64 },
    /// A source would be repeated more than the cap allows.
    EpochsExceedCap { source: Source, epochs: f64, cap: f64 },
    ZeroWeight { source: Source },
}

impl std::fmt::Display for MixWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MixWarning::WeightSumOff { sum } => {
                write!(f, "weights sum to {:.4}% (renormalized before sampling)", sum * 100.0)
            }
            MixWarning::EpochsExceedCap { source, epochs, cap } => {
                write!(f, "source {source} would run {epochs:.2} epochs (cap {cap}); repetition risk")
            }
            MixWarning::ZeroWeight { source } => write!(f, "source {source} has weight 0"),
        }
    }
}

/// Check a spec against soft expectations: weight sum within 0.5%, no
/// zero-weight sources, per-source epochs at most `epoch_cap`.
/// A negative weight is a hard error, not a warning.
pub fn validate_mix(spec: &MixSpec, epoch_cap: f64) -> Result<Vec<MixWarning>, Error> {
    for entry in &spec.entries {
        if entry.weight < 0.0 {
            return Err(Error::Config(format!(
                "negative weight {} for source {}",
                entry.weight, entry.source
            )));
        }
    }
    let mut warnings = Vec::new();
    let sum = spec.weight_sum();
    if !(0.995..=1.005).contains(&sum) {
        warnings.push(MixWarning::WeightSumOff { sum });
    }
    for entry in &spec.entries {
        if entry.weight == 0.0 {
            warnings.push(MixWarning::ZeroWeight { source: entry.source });
        }
    }
    if spec.total_training_tokens > 0 {
        for (source, epochs) in compute_epochs(spec)? {
            if epochs > epoch_cap {
                warnings.push(MixWarning::EpochsExceedCap { source, epochs, cap: epoch_cap });
            }
        }
    }
    Ok(warnings)
}

/// A materialized training stream: the (source, doc id) draw sequence
/// plus realized per-source draw fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledStream {
    pub draws: Vec<(Source, String)>,
    pub seed: u64,
    pub realized_weights: BTreeMap<Source, f64>,
}

/// Per-source cursor: shuffled epoch order, reshuffled at each wrap.
struct EpochCursor {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl EpochCursor {
    fn new(len: usize, seed: u64) -> Self {
        let mut cursor = EpochCursor {
            order: (0..len).collect(),
            pos: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        cursor.order.shuffle(&mut cursor.rng);
        cursor
    }

    fn next(&mut self) -> usize {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let idx = self.order[self.pos];
        self.pos += 1;
        idx
    }
}

/// Draw `n_draws` documents: sources i.i.d. from the renormalized weight
/// distribution, documents within a source in shuffled-epoch order.
/// Fully determined by (spec, seed).
pub fn sample_stream(
    sources: &BTreeMap<Source, Vec<Document>>,
    spec: &MixSpec,
    seed: u64,
    n_draws: usize,
) -> Result<SampledStream, Error> {
    let active: Vec<&MixEntry> = spec.entries.iter().filter(|e| e.weight > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Config("no source has positive weight".into()));
    }
    for entry in &active {
        match sources.get(&entry.source) {
            Some(docs) if !docs.is_empty() => {}
            _ => {
                return Err(Error::Config(format!(
                    "source {} has weight {} but no documents",
                    entry.source, entry.weight
                )))
            }
        }
    }

    let weights: Vec<f64> = active.iter().map(|e| e.weight).collect();
    let index = WeightedIndex::new(&weights)
        .map_err(|e| Error::Config(format!("invalid mix weights: {e}")))?;
    let mut source_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));

    let mut cursors: BTreeMap<Source, EpochCursor> = BTreeMap::new();
    for entry in &active {
        let docs = &sources[&entry.source];
        cursors.insert(
            entry.source,
            EpochCursor::new(docs.len(), derive_seed(seed, 1 + u64::from(entry.source.tag()))),
        );
    }

    let mut draws = Vec::with_capacity(n_draws);
    let mut counts: BTreeMap<Source, usize> = BTreeMap::new();
    for _ in 0..n_draws {
        let source = active[index.sample(&mut source_rng)].source;
        let docs = &sources[&source];
        let idx = cursors.get_mut(&source).expect("cursor exists").next();
        draws.push((source, docs[idx].id.clone()));
        *counts.entry(source).or_insert(0) += 1;
    }

    let realized_weights = counts
        .into_iter()
        .map(|(s, c)| (s, c as f64 / n_draws as f64))
        .collect();
    Ok(SampledStream { draws, seed, realized_weights })
}

/// Exact accounting over a materialized stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub draws: usize,
    pub per_source_tokens: BTreeMap<Source, u64>,
    pub realized_weights: BTreeMap<Source, f64>,
    pub total_tokens: u64,
    pub mean_doc_len: f64,
    /// bucket start -> number of drawn documents, same bucketing as
    /// token accounting.
    pub histogram: BTreeMap<u64, u64>,
    pub bucket_width: u64,
}

/// Token totals per source over the stream (a document drawn q times
/// contributes q times, as it would during training).
pub fn mix_report<T: Tokenizer>(
    stream: &SampledStream,
    sources: &BTreeMap<Source, Vec<Document>>,
    tokenizer: &T,
    bucket_width: u64,
) -> Result<MixReport, Error> {
    let bucket_width = bucket_width.max(1);
    // id -> token length, computed once per distinct document
    let mut lengths: BTreeMap<&str, u64> = BTreeMap::new();
    for docs in sources.values() {
        for doc in docs {
            lengths.entry(&doc.id).or_insert_with(|| tokenizer.token_count(&doc.text) as u64);
        }
    }
    let mut per_source_tokens: BTreeMap<Source, u64> = BTreeMap::new();
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total_tokens = 0u64;
    let mut counts: BTreeMap<Source, usize> = BTreeMap::new();
    for (source, id) in &stream.draws {
        let len = *lengths.get(id.as_str()).ok_or_else(|| {
            Error::Config(format!("stream references unknown document {id}"))
        })?;
        *per_source_tokens.entry(*source).or_insert(0) += len;
        *histogram.entry((len / bucket_width) * bucket_width).or_insert(0) += 1;
        total_tokens += len;
        *counts.entry(*source).or_insert(0) += 1;
    }
    let draws = stream.draws.len();
    Ok(MixReport {
        draws,
        per_source_tokens,
        realized_weights: counts
            .into_iter()
            .map(|(s, c)| (s, c as f64 / draws as f64))
            .collect(),
        total_tokens,
        mean_doc_len: if draws == 0 { 0.0 } else { total_tokens as f64 / draws as f64 },
        histogram,
        bucket_width,
    })
}

/// Reference five-source sampling strategy at 200B-training scale;
/// useful in tests and as a config template. Quantities are in tokens.
pub fn mix_200b() -> MixSpec {
    MixSpec {
        entries: vec![
            MixEntry { source: Source::Public, quantity_tokens: 25_800_000_000, weight: 0.1023 },
            MixEntry { source: Source::Ebooks, quantity_tokens: 30_900_000_000, weight: 0.1223 },
            MixEntry {
                source: Source::CommonCrawl,
                quantity_tokens: 176_200_000_000,
                weight: 0.6281,
            },
            MixEntry { source: Source::News, quantity_tokens: 19_800_000_000, weight: 0.0783 },
            MixEntry {
                source: Source::Encyclopedia,
                quantity_tokens: 5_800_000_000,
                weight: 0.069,
            },
        ],
        total_training_tokens: 0,
    }
}

/// Reference sampling strategy at 2.6B/13B-training scale. The weights
/// sum to 100.99%; kept as-is so the diagnostics surface it.
pub fn mix_2b6_13b() -> MixSpec {
    MixSpec {
        entries: vec![
            MixEntry { source: Source::Public, quantity_tokens: 7_000_000_000, weight: 0.2799 },
            MixEntry { source: Source::Ebooks, quantity_tokens: 5_600_000_000, weight: 0.18 },
            MixEntry { source: Source::CommonCrawl, quantity_tokens: 2_500_000_000, weight: 0.10 },
            MixEntry { source: Source::News, quantity_tokens: 5_600_000_000, weight: 0.22 },
            MixEntry {
                source: Source::Encyclopedia,
                quantity_tokens: 5_800_000_000,
                weight: 0.23,
            },
        ],
        total_training_tokens: 0,
    }
}
