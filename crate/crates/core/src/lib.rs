//! Construction of a Chinese pretraining corpus from heterogeneous raw
//! text sources: rule-based cleaning, model-based filtering, fuzzy
//! deduplication, perplexity-based quality evaluation, BPE token
//! accounting and weighted training-mix sampling.
//!
//! Every per-document decision is recorded as a [`corpus::RuleVerdict`]
//! so that rule changes can be audited and replayed, and every
//! stochastic component takes an explicit seed so that full pipeline
//! runs are reproducible byte for byte.

pub mod bpe;
pub mod classifier;
pub mod clean;
pub mod corpus;
pub mod dedup;
pub mod error;
pub mod filter;
pub mod hashing;
pub mod lexicon;
pub mod mix;
pub mod quality;

pub use error::{Error, Result};
