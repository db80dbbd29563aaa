//! Document data model, JSONL ingestion, label-stripping format conversion
//! and sharded persistence with manifests.
//!
//! Every record entering the pipeline becomes a [`Document`] with a
//! content-derived id and an append-only audit trail of [`RuleVerdict`]s.
//! Shards are plain JSONL files with a `<shard>.manifest` sidecar carrying
//! counts and a payload checksum.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hashing::{content_hash_hex, hash64};

/// The five data source families feeding the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Public,
    Encyclopedia,
    Ebooks,
    CommonCrawl,
    News,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Public,
        Source::Encyclopedia,
        Source::Ebooks,
        Source::CommonCrawl,
        Source::News,
    ];

    /// Stable single-byte tag used in the id hash preimage.
    pub fn tag(self) -> u8 {
        match self {
            Source::Public => 0,
            Source::Encyclopedia => 1,
            Source::Ebooks => 2,
            Source::CommonCrawl => 3,
            Source::News => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Public => "public",
            Source::Encyclopedia => "encyclopedia",
            Source::Ebooks => "ebooks",
            Source::CommonCrawl => "common_crawl",
            Source::News => "news",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "public" => Ok(Source::Public),
            "encyclopedia" => Ok(Source::Encyclopedia),
            "ebooks" => Ok(Source::Ebooks),
            "common_crawl" => Ok(Source::CommonCrawl),
            "news" => Ok(Source::News),
            other => Err(Error::Config(format!("unknown source '{other}'"))),
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pipeline stage a verdict was produced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Clean,
    Filter,
    Dedup,
}

/// What a rule decided to do with a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Keep,
    Drop,
    Transform,
}

/// One per-rule decision, kept in the document's audit trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub rule_id: String,
    pub action: Action,
    pub detail: String,
    pub stage: Stage,
}

impl RuleVerdict {
    pub fn new(rule_id: &str, action: Action, detail: impl Into<String>, stage: Stage) -> Self {
        RuleVerdict {
            rule_id: rule_id.to_string(),
            action,
            detail: detail.into(),
            stage,
        }
    }

    pub fn is_drop(&self) -> bool {
        self.action == Action::Drop
    }
}

/// One text record with provenance and processing audit trail.
///
/// `id` is a pure function of `(source, text)`; re-ingesting identical
/// input yields the identical id. `meta` is a `BTreeMap` so serialization
/// is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<RuleVerdict>,
}

impl Document {
    /// Build a document from raw text, stripping NUL scalars and
    /// assigning the content-derived id.
    pub fn new(source: Source, text: &str) -> Self {
        let text: String = if text.contains('\0') {
            text.chars().filter(|&c| c != '\0').collect()
        } else {
            text.to_string()
        };
        let id = Self::compute_id(source, &text);
        Document {
            id,
            source,
            url: None,
            title: None,
            text,
            meta: BTreeMap::new(),
            audit: Vec::new(),
        }
    }

    /// id = hex(128-bit hash of source-tag byte || 0x1F || UTF-8 text).
    pub fn compute_id(source: Source, text: &str) -> String {
        let mut preimage = Vec::with_capacity(text.len() + 2);
        preimage.push(source.tag());
        preimage.push(0x1f);
        preimage.extend_from_slice(text.as_bytes());
        content_hash_hex(&preimage)
    }

    /// Replace the text and append a transform verdict. The id is *not*
    /// recomputed: identity is fixed at ingestion so dedup survivors and
    /// drop reports stay joinable across stages.
    pub fn apply_transform(&mut self, rule_id: &str, stage: Stage, new_text: String, detail: impl Into<String>) {
        self.text = new_text;
        self.audit.push(RuleVerdict::new(rule_id, Action::Transform, detail, stage));
    }

    pub fn push_verdict(&mut self, verdict: RuleVerdict) {
        self.audit.push(verdict);
    }

    /// True if any audit entry dropped the document.
    pub fn is_dropped(&self) -> bool {
        self.audit.iter().any(RuleVerdict::is_drop)
    }
}

/// What to do with malformed input lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// Count and skip malformed lines (the default; crawl data is dirty).
    #[default]
    Skip,
    /// Abort on the first malformed line.
    Fail,
}

/// Counters reported by ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub read: usize,
    pub skipped: usize,
}

/// Raw JSONL record shape accepted at ingestion. A pre-assigned `id` is
/// ignored and recomputed.
#[derive(Debug, Deserialize)]
struct RawRecord {
    text: String,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

/// Parse one record line into a `Document`.
fn parse_record_line(line: &str, source: Source) -> Result<Document, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let mut doc = Document::new(source, &raw.text);
    doc.url = raw.url;
    doc.title = raw.title;
    doc.meta = raw.meta;
    Ok(doc)
}

/// Streaming JSONL reader yielding `Document`s under an [`ErrorPolicy`].
///
/// Under `Skip`, malformed lines bump [`JsonlIngest::skipped`] and the
/// iterator moves on; under `Fail` the offending line number is reported.
pub struct JsonlIngest {
    lines: std::io::Lines<BufReader<File>>,
    source: Source,
    policy: ErrorPolicy,
    path: PathBuf,
    line_no: usize,
    skipped: usize,
    read: usize,
}

impl JsonlIngest {
    pub fn open(path: &Path, source: Source, policy: ErrorPolicy) -> Result<Self, Error> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlIngest {
            lines: BufReader::new(file).lines(),
            source,
            policy,
            path: path.to_path_buf(),
            line_no: 0,
            skipped: 0,
            read: 0,
        })
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn stats(&self) -> IngestStats {
        IngestStats { read: self.read, skipped: self.skipped }
    }
}

impl Iterator for JsonlIngest {
    type Item = Result<Document, Error>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            match parse_record_line(&line, self.source) {
                Ok(doc) => {
                    self.read += 1;
                    return Some(Ok(doc));
                }
                Err(cause) => match self.policy {
                    ErrorPolicy::Skip => {
                        self.skipped += 1;
                        continue;
                    }
                    ErrorPolicy::Fail => {
                        return Some(Err(Error::MalformedLine {
                            path: self.path.clone(),
                            line: self.line_no,
                            cause,
                        }))
                    }
                },
            }
        }
    }
}

/// Eagerly ingest a whole JSONL file.
pub fn ingest_jsonl(
    path: &Path,
    source: Source,
    policy: ErrorPolicy,
) -> Result<(Vec<Document>, IngestStats), Error> {
    let mut iter = JsonlIngest::open(path, source, policy)?;
    let mut docs = Vec::new();
    for item in &mut iter {
        docs.push(item?);
    }
    let stats = iter.stats();
    Ok((docs, stats))
}

/// Convert a labeled record into a plain-text document by concatenating
/// the listed text fields (newline-joined, in order) and discarding every
/// other field, labels included.
pub fn strip_labels(
    record: &serde_json::Value,
    text_fields: &[String],
    source: Source,
) -> Result<Document, Error> {
    let mut parts: Vec<&str> = Vec::new();
    for field in text_fields {
        if let Some(v) = record.get(field).and_then(|v| v.as_str()) {
            parts.push(v);
        }
    }
    if parts.is_empty() {
        return Err(Error::RecordRejected(format!(
            "none of the text fields [{}] present",
            text_fields.join(", ")
        )));
    }
    Ok(Document::new(source, &parts.join("\n")))
}

/// Manifest sidecar describing one shard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub doc_count: usize,
    pub byte_count: usize,
    /// 64-bit hash over the serialized payload bytes.
    pub checksum: u64,
    pub source_histogram: BTreeMap<Source, usize>,
}

const SHARD_CHECKSUM_SEED: u64 = 0x5348_4152_4443_4b53; // "SHARDCKS"

fn manifest_path(shard: &Path) -> PathBuf {
    let mut os = shard.as_os_str().to_owned();
    os.push(".manifest");
    PathBuf::from(os)
}

/// Serialize documents to a JSONL shard plus its manifest sidecar.
///
/// Serialization is byte-stable: field order is fixed by the struct and
/// `meta` is ordered, so `read_shard(write_shard(X)) == X` byte for byte.
pub fn write_shard(docs: &[Document], path: &Path) -> Result<ShardManifest, Error> {
    let mut payload = Vec::new();
    let mut histogram: BTreeMap<Source, usize> = BTreeMap::new();
    for doc in docs {
        serde_json::to_writer(&mut payload, doc).map_err(|e| Error::io_other(path, e.to_string()))?;
        payload.push(b'\n');
        *histogram.entry(doc.source).or_insert(0) += 1;
    }
    let manifest = ShardManifest {
        doc_count: docs.len(),
        byte_count: payload.len(),
        checksum: hash64(&payload, SHARD_CHECKSUM_SEED),
        source_histogram: histogram,
    };
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    out.write_all(&payload).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = manifest_path(path);
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::io_other(&sidecar, e.to_string()))?;
    std::fs::write(&sidecar, manifest_json).map_err(|e| Error::io(&sidecar, e))?;
    Ok(manifest)
}

/// Read a shard back, verifying the manifest checksum and counts.
pub fn read_shard(path: &Path) -> Result<Vec<Document>, Error> {
    let sidecar = manifest_path(path);
    let manifest_json = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let manifest: ShardManifest =
        serde_json::from_str(&manifest_json).map_err(|e| Error::io_other(&sidecar, e.to_string()))?;

    let mut payload = Vec::new();
    File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(path, e))?;

    if hash64(&payload, SHARD_CHECKSUM_SEED) != manifest.checksum {
        return Err(Error::ChecksumMismatch { path: path.to_path_buf() });
    }
    let mut docs = Vec::with_capacity(manifest.doc_count);
    for line in payload.split(|&b| b == b'\n') {
        if line.is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_slice(line).map_err(|e| Error::io_other(path, e.to_string()))?;
        docs.push(doc);
    }
    if docs.len() != manifest.doc_count {
        return Err(Error::io_other(
            path,
            format!("manifest doc_count {} != {} records", manifest.doc_count, docs.len()),
        ));
    }
    Ok(docs)
}

/// Read the manifest sidecar alone.
pub fn read_manifest(path: &Path) -> Result<ShardManifest, Error> {
    let sidecar = manifest_path(path);
    let manifest_json = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    serde_json::from_str(&manifest_json).map_err(|e| Error::io_other(&sidecar, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(dir: &tempfile::TempDir, name: &str, lines: &[&str]) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        path
    }

    #[test]
    fn ingest_well_formed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "a.jsonl",
            &[
                r#"{"text":"第一篇文档"}"#,
                r#"{"text":"第二篇文档","title":"标题"}"#,
                r#"{"text":"第三篇文档","url":"http://example.com"}"#,
            ],
        );
        let (docs, stats) = ingest_jsonl(&path, Source::News, ErrorPolicy::Skip).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(stats, IngestStats { read: 3, skipped: 0 });
        assert_eq!(docs[1].title.as_deref(), Some("标题"));
    }

    #[test]
    fn ingest_skips_malformed_under_skip_policy() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "b.jsonl",
            &[r#"{"text":"好的"}"#, r#"{"broken"#, r#"{"text":"可以"}"#],
        );
        let (docs, stats) = ingest_jsonl(&path, Source::CommonCrawl, ErrorPolicy::Skip).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(stats.skipped, 1);
    }

    #[test]
    fn ingest_fails_with_line_number_under_fail_policy() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(&dir, "c.jsonl", &[r#"{"text":"好"}"#, "not json"]);
        let err = ingest_jsonl(&path, Source::CommonCrawl, ErrorPolicy::Fail).unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_missing_file_is_fatal() {
        let err = ingest_jsonl(Path::new("/no/such/file.jsonl"), Source::News, ErrorPolicy::Skip);
        assert!(err.is_err());
    }

    #[test]
    fn id_is_deterministic_and_input_sensitive() {
        let a = Document::new(Source::News, "同一段文字");
        let b = Document::new(Source::News, "同一段文字");
        let c = Document::new(Source::Ebooks, "同一段文字");
        let d = Document::new(Source::News, "另一段文字");
        assert_eq!(a.id, b.id);
        assert_ne!(a.id, c.id);
        assert_ne!(a.id, d.id);
        assert_eq!(a.id.len(), 32);
    }

    #[test]
    fn document_new_strips_nul() {
        let d = Document::new(Source::News, "好\0的");
        assert_eq!(d.text, "好的");
    }

    #[test]
    fn strip_labels_joins_fields_and_drops_labels() {
        let record: serde_json::Value =
            serde_json::from_str(r#"{"question":"Q","answer":"A","label":"1"}"#).unwrap();
        let fields = vec!["question".to_string(), "answer".to_string()];
        let doc = strip_labels(&record, &fields, Source::Public).unwrap();
        assert_eq!(doc.text, "Q\nA");
        assert!(doc.meta.is_empty());
        let serialized = serde_json::to_string(&doc).unwrap();
        assert!(!serialized.contains("label"));
    }

    #[test]
    fn strip_labels_single_field() {
        let record: serde_json::Value = serde_json::from_str(r#"{"question":"Q"}"#).unwrap();
        let doc = strip_labels(&record, &["question".to_string()], Source::Public).unwrap();
        assert_eq!(doc.text, "Q");
    }

    #[test]
    fn strip_labels_rejects_when_no_field_present() {
        let record: serde_json::Value = serde_json::from_str(r#"{"label":"1"}"#).unwrap();
        let err = strip_labels(&record, &["question".to_string()], Source::Public);
        assert!(matches!(err, Err(Error::RecordRejected(_))));
    }

    #[test]
    fn shard_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shard-0.jsonl");
        let docs: Vec<Document> = (0..100)
            .map(|i| {
                let mut d = Document::new(Source::CommonCrawl, &format!("文档内容第{i}号"));
                if i % 3 == 0 {
                    d.meta.insert("k".into(), i.to_string());
                }
                d
            })
            .collect();
        let manifest = write_shard(&docs, &path).unwrap();
        assert_eq!(manifest.doc_count, 100);
        assert_eq!(manifest.source_histogram[&Source::CommonCrawl], 100);

        let bytes_first = std::fs::read(&path).unwrap();
        let back = read_shard(&path).unwrap();
        assert_eq!(back, docs);

        write_shard(&back, &path).unwrap();
        let bytes_second = std::fs::read(&path).unwrap();
        assert_eq!(bytes_first, bytes_second);
    }

    #[test]
    fn empty_shard_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let manifest = write_shard(&[], &path).unwrap();
        assert_eq!(manifest.doc_count, 0);
        assert_eq!(manifest.byte_count, 0);
        assert!(read_shard(&path).unwrap().is_empty());
    }

    #[test]
    fn corrupted_payload_byte_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shard.jsonl");
        let docs = vec![Document::new(Source::News, "一些内容在这里")];
        write_shard(&docs, &path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();

        match read_shard(&path) {
            Err(Error::ChecksumMismatch { path: p }) => assert_eq!(p, path),
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
    }
}
