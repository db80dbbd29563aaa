//! Stage and pipeline reports: machine-readable JSON plus a plain-text
//! rendering for the terminal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use zhpipe_core::corpus::Source;

/// Counters for one pipeline stage. `docs_in == docs_out + sum(dropped)`
/// holds for every stage; timing fields are excluded from determinism
/// comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub docs_in: u64,
    pub docs_out: u64,
    pub dropped_by_rule: BTreeMap<String, u64>,
    /// Malformed or rejected input lines (never became documents).
    pub malformed_skipped: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub wall_ms: u64,
    pub throughput_mb_s: f64,
}

impl StageReport {
    pub fn dropped_total(&self) -> u64 {
        self.dropped_by_rule.values().sum()
    }

    pub fn conserves_documents(&self) -> bool {
        self.docs_in == self.docs_out + self.dropped_total()
    }

    /// The stable subset compared across reruns.
    pub fn deterministic_view(&self) -> StageReport {
        StageReport { wall_ms: 0, throughput_mb_s: 0.0, ..self.clone() }
    }
}

/// Per-source composition summary, the final corpus statistics table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub docs: u64,
    pub bytes: u64,
    pub tokens: u64,
    pub mean_doc_tokens: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_source: BTreeMap<Source, SourceStats>,
    pub total_docs: u64,
    pub total_bytes: u64,
    pub total_tokens: u64,
    pub mean_doc_tokens: f64,
    pub histogram: BTreeMap<u64, u64>,
    pub histogram_bucket: u64,
}

impl CorpusStats {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>10} {:>14} {:>14} {:>12}\n",
            "source", "docs", "bytes", "tokens", "mean tokens"
        ));
        for (source, stats) in &self.per_source {
            out.push_str(&format!(
                "{:<14} {:>10} {:>14} {:>14} {:>12.1}\n",
                source.as_str(),
                stats.docs,
                stats.bytes,
                stats.tokens,
                stats.mean_doc_tokens
            ));
        }
        out.push_str(&format!(
            "{:<14} {:>10} {:>14} {:>14} {:>12.1}\n",
            "total", self.total_docs, self.total_bytes, self.total_tokens, self.mean_doc_tokens
        ));
        out
    }
}

/// Whole-run report: one entry per executed stage, plus optional eval,
/// mix and stats payloads.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<CorpusStats>,
}

impl PipelineReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for stage in &self.stages {
            out.push_str(&format!(
                "[{}] in={} out={} dropped={} skipped={} bytes={}→{} wall={}ms {:.1}MB/s\n",
                stage.stage,
                stage.docs_in,
                stage.docs_out,
                stage.dropped_total(),
                stage.malformed_skipped,
                stage.bytes_in,
                stage.bytes_out,
                stage.wall_ms,
                stage.throughput_mb_s
            ));
            for (rule, count) in &stage.dropped_by_rule {
                out.push_str(&format!("    drop {rule}: {count}\n"));
            }
        }
        if let Some(stats) = &self.stats {
            out.push('\n');
            out.push_str(&stats.render_table());
        }
        out
    }
}
