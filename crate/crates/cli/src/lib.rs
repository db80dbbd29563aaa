//! Pipeline orchestration: wires ingestion, cleaning, filtering,
//! deduplication, evaluation and mix sampling over sharded stage
//! directories, with one config file and one seed.

pub mod config;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

/// CLI-level errors, mapped onto exit codes: configuration problems are
/// exit 1, missing upstream stage outputs are exit 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing upstream shards: {0}; run `{1}` first")]
    MissingUpstream(String, String),

    #[error(transparent)]
    Core(#[from] zhpipe_core::Error),

    #[error("io error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingUpstream(..) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: err.to_string() }
    }
}

/// The pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    Clean,
    Filter,
    Dedup,
    Eval,
    Mix,
    Stats,
    All,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Clean => "clean",
            Stage::Filter => "filter",
            Stage::Dedup => "dedup",
            Stage::Eval => "eval",
            Stage::Mix => "mix",
            Stage::Stats => "stats",
            Stage::All => "all",
        }
    }
}
