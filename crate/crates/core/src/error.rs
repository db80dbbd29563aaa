//! Crate-wide error type.

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("malformed line {line} in {path}: {cause}")]
    MalformedLine { path: PathBuf, line: usize, cause: String },

    #[error("record rejected: {0}")]
    RecordRejected(String),

    #[error("checksum mismatch reading shard {path}")]
    ChecksumMismatch { path: PathBuf },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(
        "zero-probability event for token {token:?} after context {context:?}; \
         use add-k smoothing with k > 0 or stupid backoff"
    )]
    ZeroProbability { context: String, token: char },
}

impl Error {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), message: err.to_string() }
    }

    pub fn io_other(path: &Path, message: String) -> Self {
        Error::Io { path: path.to_path_buf(), message }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
