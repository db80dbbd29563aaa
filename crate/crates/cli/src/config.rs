//! Pipeline configuration: one TOML file drives every stage, one seed
//! feeds every stochastic component.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use zhpipe_core::clean::{CleanConfig, ParagraphSplit};
use zhpipe_core::corpus::{ErrorPolicy, Source};
use zhpipe_core::dedup::DedupParams;
use zhpipe_core::lexicon::{bundled_t2s, load_lexicon, T2sTable};
use zhpipe_core::quality::Smoothing;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for parallel stages; 0 = one per CPU.
    #[serde(default)]
    pub workers: usize,
    pub io: IoConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub clean: CleanSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub dedup: DedupSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub tokenizer: TokenizerSection,
    #[serde(default)]
    pub mix: MixSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    pub output_dir: PathBuf,
    #[serde(default = "default_shard_size")]
    pub shard_size: usize,
    /// Input files or directories per source; directories contribute
    /// every `.jsonl` file inside, sorted by name.
    #[serde(default)]
    pub inputs: BTreeMap<Source, Vec<PathBuf>>,
    /// Sources whose records are labeled datasets: the listed fields are
    /// concatenated (in order) into the text and everything else,
    /// labels included, is discarded.
    #[serde(default)]
    pub text_fields: BTreeMap<Source, Vec<String>>,
}

fn default_shard_size() -> usize {
    1000
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    #[serde(default)]
    pub error_policy: ErrorPolicy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanSection {
    #[serde(default = "default_min_chinese_ratio")]
    pub min_chinese_ratio: f64,
    #[serde(default = "default_min_chars")]
    pub min_chars: usize,
    #[serde(default = "default_ad_threshold")]
    pub ad_threshold: usize,
    /// Lexicon file; bundled default when absent.
    #[serde(default)]
    pub ad_keywords: Option<PathBuf>,
    /// TSV table file; bundled default when absent.
    #[serde(default)]
    pub t2s_table: Option<PathBuf>,
    #[serde(default = "default_nav_max_line_chars")]
    pub nav_max_line_chars: usize,
    #[serde(default = "default_nav_min_delim_density")]
    pub nav_min_delim_density: f64,
    #[serde(default)]
    pub paragraph_split: ParagraphSplit,
}

fn default_min_chinese_ratio() -> f64 {
    0.60
}
fn default_min_chars() -> usize {
    150
}
fn default_ad_threshold() -> usize {
    3
}
fn default_nav_max_line_chars() -> usize {
    40
}
fn default_nav_min_delim_density() -> f64 {
    0.15
}

impl Default for CleanSection {
    fn default() -> Self {
        CleanSection {
            min_chinese_ratio: default_min_chinese_ratio(),
            min_chars: default_min_chars(),
            ad_threshold: default_ad_threshold(),
            ad_keywords: None,
            t2s_table: None,
            nav_max_line_chars: default_nav_max_line_chars(),
            nav_min_delim_density: default_nav_min_delim_density(),
            paragraph_split: ParagraphSplit::default(),
        }
    }
}

impl CleanSection {
    pub fn to_core(&self, base: &Path) -> Result<CleanConfig, CliError> {
        let t2s = match &self.t2s_table {
            Some(path) => T2sTable::load(&resolve(base, path))?,
            None => bundled_t2s().clone(),
        };
        let ad_entries: Vec<String> = match &self.ad_keywords {
            Some(path) => {
                let entries = load_lexicon(&resolve(base, path))?;
                entries.iter().map(|w| t2s.convert(w)).collect()
            }
            None => zhpipe_core::lexicon::bundled_ad_keywords().to_vec(),
        };
        let ad_keywords = zhpipe_core::lexicon::KeywordMatcher::new(&ad_entries);
        let cfg = CleanConfig {
            min_chinese_ratio: self.min_chinese_ratio,
            min_chars: self.min_chars,
            ad_keywords,
            ad_threshold: self.ad_threshold,
            t2s,
            nav_max_line_chars: self.nav_max_line_chars,
            nav_min_delim_density: self.nav_min_delim_density,
            paragraph_split: self.paragraph_split,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Where a filter model comes from: an existing file, or training data
/// to fit one (the fitted model is saved next to the stage output).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub train_positive: Option<PathBuf>,
    #[serde(default)]
    pub train_negative: Option<PathBuf>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_dim_log2")]
    pub dim_log2: u32,
    #[serde(default = "default_ngram_orders")]
    pub ngram_orders: Vec<usize>,
}

fn default_epochs() -> usize {
    5
}
fn default_learning_rate() -> f64 {
    0.5
}
fn default_dim_log2() -> u32 {
    16
}
fn default_ngram_orders() -> Vec<usize> {
    vec![1, 2]
}

impl ModelSource {
    pub fn configured(&self) -> bool {
        self.path.is_some() || (self.train_positive.is_some() && self.train_negative.is_some())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default = "default_true")]
    pub sensitive_enabled: bool,
    /// Lexicon file; bundled placeholder when absent.
    #[serde(default)]
    pub sensitive_lexicon: Option<PathBuf>,
    /// Drop when MORE THAN this many distinct sensitive words occur.
    #[serde(default = "default_max_distinct")]
    pub max_distinct_sensitive: usize,
    #[serde(default)]
    pub spam: ModelSource,
    #[serde(default = "default_spam_threshold")]
    pub spam_threshold: f64,
    #[serde(default)]
    pub quality: ModelSource,
    #[serde(default = "default_quality_threshold")]
    pub quality_threshold: f64,
}

fn default_true() -> bool {
    true
}
fn default_max_distinct() -> usize {
    3
}
fn default_spam_threshold() -> f64 {
    0.5
}
fn default_quality_threshold() -> f64 {
    0.5
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            sensitive_enabled: true,
            sensitive_lexicon: None,
            max_distinct_sensitive: default_max_distinct(),
            spam: ModelSource::default(),
            spam_threshold: default_spam_threshold(),
            quality: ModelSource::default(),
            quality_threshold: default_quality_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DedupSection {
    #[serde(default = "default_shingle_w")]
    pub shingle_w: usize,
    #[serde(default = "default_num_hashes")]
    pub num_hashes: usize,
    #[serde(default = "default_bands")]
    pub bands: usize,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_jaccard_threshold")]
    pub jaccard_threshold: f64,
}

fn default_shingle_w() -> usize {
    5
}
fn default_num_hashes() -> usize {
    128
}
fn default_bands() -> usize {
    32
}
fn default_rows() -> usize {
    4
}
fn default_jaccard_threshold() -> f64 {
    0.8
}

impl Default for DedupSection {
    fn default() -> Self {
        DedupSection {
            shingle_w: default_shingle_w(),
            num_hashes: default_num_hashes(),
            bands: default_bands(),
            rows: default_rows(),
            jaccard_threshold: default_jaccard_threshold(),
        }
    }
}

impl DedupSection {
    pub fn to_core(&self, seed: u64) -> DedupParams {
        DedupParams {
            shingle_w: self.shingle_w,
            num_hashes: self.num_hashes,
            bands: self.bands,
            rows: self.rows,
            jaccard_threshold: self.jaccard_threshold,
            verify: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// High-quality dev set, one document per line. Never touched by
    /// any pipeline stage.
    #[serde(default)]
    pub dev_path: Option<PathBuf>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_smoothing_kind")]
    pub smoothing: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    /// Probe training sample size (documents).
    #[serde(default = "default_sample_docs")]
    pub sample_docs: usize,
    #[serde(default = "default_review_sample")]
    pub review_sample: usize,
    /// Second corpus directory to compare against, if any.
    #[serde(default)]
    pub compare_with: Option<PathBuf>,
}

fn default_order() -> usize {
    3
}
fn default_smoothing_kind() -> String {
    "stupid_backoff".to_string()
}
fn default_lambda() -> f64 {
    0.4
}
fn default_k() -> f64 {
    0.5
}
fn default_sample_docs() -> usize {
    2000
}
fn default_review_sample() -> usize {
    20
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            dev_path: None,
            order: default_order(),
            smoothing: default_smoothing_kind(),
            lambda: default_lambda(),
            k: default_k(),
            sample_docs: default_sample_docs(),
            review_sample: default_review_sample(),
            compare_with: None,
        }
    }
}

impl EvalSection {
    pub fn smoothing(&self) -> Result<Smoothing, CliError> {
        match self.smoothing.as_str() {
            "stupid_backoff" => Ok(Smoothing::StupidBackoff { lambda: self.lambda }),
            "add_k" => Ok(Smoothing::AddK { k: self.k }),
            other => Err(CliError::Config(format!("unknown smoothing {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerSection {
    /// "char" or "bpe".
    #[serde(default = "default_tokenizer_mode")]
    pub mode: String,
    /// BPE model file; loaded when present, otherwise trained on the
    /// deduplicated corpus and saved here.
    #[serde(default)]
    pub model_path: Option<PathBuf>,
    #[serde(default = "default_target_vocab")]
    pub train_target_vocab: usize,
    #[serde(default = "default_bucket")]
    pub histogram_bucket: u64,
}

fn default_tokenizer_mode() -> String {
    "char".to_string()
}
fn default_target_vocab() -> usize {
    2000
}
fn default_bucket() -> u64 {
    64
}

impl Default for TokenizerSection {
    fn default() -> Self {
        TokenizerSection {
            mode: default_tokenizer_mode(),
            model_path: None,
            train_target_vocab: default_target_vocab(),
            histogram_bucket: default_bucket(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixSection {
    #[serde(default)]
    pub spec_path: Option<PathBuf>,
    #[serde(default = "default_n_draws")]
    pub n_draws: usize,
    #[serde(default = "default_epoch_cap")]
    pub epoch_cap: f64,
}

fn default_n_draws() -> usize {
    10_000
}
fn default_epoch_cap() -> f64 {
    10.0
}

impl PipelineConfig {
    /// Parse a config file; relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: PipelineConfig = toml::from_str(&content)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((config, base))
    }
}

/// Resolve a possibly-relative path against the config file directory.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
