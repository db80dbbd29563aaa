//! Fuzzy cross-source deduplication: character shingles, MinHash
//! signatures, LSH banding, candidate verification, union-find
//! clustering and deterministic survivor selection.
//!
//! Three explicit phases so a distributed backend could slot in behind
//! the same boundaries:
//!   1. sign every document (parallel map),
//!   2. group signatures by band bucket key (keyed shuffle),
//!   3. verify candidate pairs and cluster them (reduce).
//!
//! The output is a pure function of the input document set and the
//! parameters — shard order never changes survivors.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Action, Document, RuleVerdict, Stage};
use crate::error::Error;
use crate::hashing::{derive_seed, hash64, rehash64};

const SHINGLE_SEED: u64 = 0x73_6869_6e67_6c65;
const BAND_SEED: u64 = 0x62_616e_646b_6579;

/// Parameters for one dedup run. `bands * rows` must equal `num_hashes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupParams {
    /// Character shingle width.
    pub shingle_w: usize,
    /// Signature length k.
    pub num_hashes: usize,
    pub bands: usize,
    pub rows: usize,
    /// Estimated-Jaccard threshold for verified candidate pairs.
    pub jaccard_threshold: f64,
    /// Verify candidates before clustering. Disable only when raw
    /// candidacy itself is the object of study.
    pub verify: bool,
    /// Master seed for the hash family.
    pub seed: u64,
}

impl Default for DedupParams {
    fn default() -> Self {
        DedupParams {
            shingle_w: 5,
            num_hashes: 128,
            bands: 32,
            rows: 4,
            jaccard_threshold: 0.8,
            verify: true,
            seed: 0x64_6564_7570,
        }
    }
}

impl DedupParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.shingle_w == 0 {
            return Err(Error::Config("shingle_w must be >= 1".into()));
        }
        if self.bands * self.rows != self.num_hashes {
            return Err(Error::Config(format!(
                "bands*rows must equal num_hashes ({}*{} != {})",
                self.bands, self.rows, self.num_hashes
            )));
        }
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(Error::Config("jaccard_threshold must be in (0,1]".into()));
        }
        Ok(())
    }

    /// Per-coordinate seeds of the hash family.
    pub fn family_seeds(&self) -> Vec<u64> {
        (0..self.num_hashes as u64).map(|i| derive_seed(self.seed, i)).collect()
    }
}

/// Hash set of all `w`-scalar windows of the whitespace-stripped text.
/// Whitespace carries no content in Chinese text, so it is removed
/// before windowing. Texts shorter than `w` give the empty set.
pub fn shingles(text: &str, w: usize) -> HashSet<u64> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = HashSet::new();
    if chars.len() < w {
        return out;
    }
    let mut buf = String::new();
    for window in chars.windows(w) {
        buf.clear();
        buf.extend(window.iter());
        out.insert(hash64(buf.as_bytes(), SHINGLE_SEED));
    }
    out
}

/// Brute-force Jaccard over shingle sets; the oracle for estimator tests.
pub fn exact_jaccard(a: &HashSet<u64>, b: &HashSet<u64>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// MinHash sketch of one document's shingle set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub doc_id: String,
    pub mins: Vec<u64>,
    /// Set when the shingle set was empty; estimates treat such
    /// signatures specially.
    pub empty: bool,
}

/// mins[i] = min over the shingle set of family member i.
pub fn minhash(doc_id: &str, sh: &HashSet<u64>, seeds: &[u64]) -> MinHashSignature {
    if sh.is_empty() {
        return MinHashSignature {
            doc_id: doc_id.to_string(),
            mins: vec![u64::MAX; seeds.len()],
            empty: true,
        };
    }
    let mut mins = vec![u64::MAX; seeds.len()];
    for &item in sh {
        for (slot, &seed) in mins.iter_mut().zip(seeds.iter()) {
            let h = rehash64(item, seed);
            if h < *slot {
                *slot = h;
            }
        }
    }
    MinHashSignature { doc_id: doc_id.to_string(), mins, empty: false }
}

/// Fraction of coordinates on which the signatures agree. Empty-set
/// conventions: both empty -> 1, one empty -> 0.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, Error> {
    if a.mins.len() != b.mins.len() {
        return Err(Error::Config(format!(
            "signature length mismatch: {} vs {}",
            a.mins.len(),
            b.mins.len()
        )));
    }
    match (a.empty, b.empty) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let agree = a.mins.iter().zip(&b.mins).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.mins.len() as f64)
}

/// One bucket key per band: hash of (band index || the band's rows).
pub fn lsh_bucket_keys(sig: &MinHashSignature, bands: usize, rows: usize) -> Vec<u64> {
    debug_assert_eq!(bands * rows, sig.mins.len());
    let mut keys = Vec::with_capacity(bands);
    let mut buf = Vec::with_capacity(8 + rows * 8);
    for band in 0..bands {
        buf.clear();
        buf.extend_from_slice(&(band as u64).to_le_bytes());
        for &m in &sig.mins[band * rows..(band + 1) * rows] {
            buf.extend_from_slice(&m.to_le_bytes());
        }
        keys.push(hash64(&buf, BAND_SEED));
    }
    keys
}

/// One connected group of near-duplicate documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DupCluster {
    pub members: BTreeSet<String>,
    /// Lexicographically smallest member id; the one document kept.
    pub survivor: String,
    /// Verified edges with their estimated Jaccard.
    pub evidence: Vec<(String, String, f64)>,
}

/// Disjoint-set forest with path compression and union by rank.
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
    }
}

/// Summary counters for one dedup run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DedupReport {
    pub docs_in: usize,
    pub docs_out: usize,
    /// Re-ingested copies sharing an id (identical source and text),
    /// collapsed before fuzzy matching.
    pub exact_duplicates: usize,
    pub candidate_pairs: usize,
    pub verified_pairs: usize,
    pub clusters: usize,
    pub dropped: usize,
}

/// Full dedup outcome: survivors (input order), clusters, counters.
pub struct DedupOutcome {
    pub survivors: Vec<Document>,
    /// Non-survivors with their dedup verdict appended.
    pub dropped: Vec<Document>,
    pub clusters: Vec<DupCluster>,
    pub report: DedupReport,
}

/// Run the three-phase dedup over an already-materialized document set.
///
/// Documents must have unique ids. Survivor selection is the smallest
/// doc id in each cluster, so the outcome is independent of input
/// order; survivors are returned in input order.
pub fn deduplicate(docs: Vec<Document>, params: &DedupParams) -> Result<DedupOutcome, Error> {
    params.validate()?;
    let seeds = params.family_seeds();

    // Identity pre-pass: an id names one (source, text) value, so a
    // repeated id IS the same document; keep the first copy only.
    let docs_in_total = docs.len();
    let mut seen_ids: HashSet<String> = HashSet::with_capacity(docs.len());
    let mut exact_dropped: Vec<Document> = Vec::new();
    let mut unique: Vec<Document> = Vec::with_capacity(docs.len());
    for mut doc in docs {
        if seen_ids.insert(doc.id.clone()) {
            unique.push(doc);
        } else {
            doc.push_verdict(RuleVerdict::new(
                "exact_duplicate",
                Action::Drop,
                "repeated document id",
                Stage::Dedup,
            ));
            exact_dropped.push(doc);
        }
    }
    let docs = unique;

    // Phase 1: parallel signing.
    let signatures: Vec<MinHashSignature> = docs
        .par_iter()
        .map(|doc| minhash(&doc.id, &shingles(&doc.text, params.shingle_w), &seeds))
        .collect();

    // Phase 2: group by bucket key. Identical documents share all band
    // keys; near-duplicates share at least one with high probability.
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (idx, sig) in signatures.iter().enumerate() {
        if sig.empty {
            continue; // empty docs are never fuzzy-matched
        }
        for key in lsh_bucket_keys(sig, params.bands, params.rows) {
            buckets.entry(key).or_default().push(idx);
        }
    }

    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    for members in buckets.values() {
        if members.len() < 2 {
            continue;
        }
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let (a, b) = (members[i].min(members[j]), members[i].max(members[j]));
                if a != b {
                    candidates.insert((a, b));
                }
            }
        }
    }

    // Phase 3: verify, cluster, select survivors.
    let mut verified: Vec<(usize, usize, f64)> = Vec::new();
    for &(a, b) in &candidates {
        let est = estimate_jaccard(&signatures[a], &signatures[b])?;
        if !params.verify || est >= params.jaccard_threshold {
            verified.push((a, b, est));
        }
    }

    let mut uf = UnionFind::new(docs.len());
    for &(a, b, _) in &verified {
        uf.union(a, b);
    }

    // root -> member indices, only for components with >= 2 members
    let mut components: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut root_of: Vec<usize> = Vec::with_capacity(docs.len());
    for idx in 0..docs.len() {
        root_of.push(uf.find(idx));
    }
    let mut component_size: HashMap<usize, usize> = HashMap::new();
    for &r in &root_of {
        *component_size.entry(r).or_insert(0) += 1;
    }
    for idx in 0..docs.len() {
        let root = root_of[idx];
        if component_size[&root] >= 2 {
            // keyed by the smallest doc id for deterministic ordering
            components.entry(smallest_id(&docs, &root_of, root)).or_default().push(idx);
        }
    }

    let mut edge_lists: BTreeMap<String, Vec<(String, String, f64)>> = BTreeMap::new();
    for &(a, b, est) in &verified {
        let key = smallest_id(&docs, &root_of, root_of[a]);
        let (ida, idb) = if docs[a].id <= docs[b].id {
            (docs[a].id.clone(), docs[b].id.clone())
        } else {
            (docs[b].id.clone(), docs[a].id.clone())
        };
        edge_lists.entry(key).or_default().push((ida, idb, est));
    }

    let mut clusters = Vec::with_capacity(components.len());
    let mut drop_ids: HashSet<String> = HashSet::new();
    for (survivor, member_idx) in &components {
        let members: BTreeSet<String> = member_idx.iter().map(|&i| docs[i].id.clone()).collect();
        for id in &members {
            if id != survivor {
                drop_ids.insert(id.clone());
            }
        }
        let mut evidence = edge_lists.remove(survivor).unwrap_or_default();
        evidence.sort_by(|x, y| x.partial_cmp(y).unwrap());
        clusters.push(DupCluster { members, survivor: survivor.clone(), evidence });
    }

    let mut survivors = Vec::with_capacity(docs.len() - drop_ids.len());
    let mut dropped = exact_dropped;
    for mut doc in docs {
        if drop_ids.contains(&doc.id) {
            doc.push_verdict(RuleVerdict::new(
                "near_duplicate",
                Action::Drop,
                format!("cluster_survivor={}", cluster_survivor(&clusters, &doc.id)),
                Stage::Dedup,
            ));
            dropped.push(doc);
        } else {
            survivors.push(doc);
        }
    }

    let report = DedupReport {
        docs_in: docs_in_total,
        docs_out: survivors.len(),
        exact_duplicates: docs_in_total - seen_ids.len(),
        candidate_pairs: candidates.len(),
        verified_pairs: verified.len(),
        clusters: clusters.len(),
        dropped: dropped.len(),
    };
    Ok(DedupOutcome { survivors, dropped, clusters, report })
}

fn smallest_id(docs: &[Document], root_of: &[usize], root: usize) -> String {
    docs.iter()
        .enumerate()
        .filter(|(i, _)| root_of[*i] == root)
        .map(|(_, d)| d.id.as_str())
        .min()
        .expect("component is non-empty")
        .to_string()
}

fn cluster_survivor<'a>(clusters: &'a [DupCluster], member: &str) -> &'a str {
    clusters
        .iter()
        .find(|c| c.members.contains(member))
        .map(|c| c.survivor.as_str())
        .unwrap_or("")
}

// -- signature cache --------------------------------------------------------
//
// Signatures are pure functions of (document text, params), so they can
// be reused across runs. The sidecar is JSONL with a header line keyed
// by the params hash; a cache written under different params is ignored.

/// Stable hash of everything that determines signature values.
pub fn params_cache_key(params: &DedupParams) -> u64 {
    let mut buf = Vec::new();
    buf.extend_from_slice(&(params.shingle_w as u64).to_le_bytes());
    buf.extend_from_slice(&(params.num_hashes as u64).to_le_bytes());
    buf.extend_from_slice(&params.seed.to_le_bytes());
    hash64(&buf, 0x7369_6763)
}

pub fn write_signature_cache(
    path: &std::path::Path,
    params: &DedupParams,
    signatures: &[MinHashSignature],
) -> Result<(), Error> {
    let mut out = String::new();
    out.push_str(&format!("{{\"params_key\":{}}}\n", params_cache_key(params)));
    for sig in signatures {
        out.push_str(&serde_json::to_string(sig).map_err(|e| Error::Config(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load a cache written under the same params; `Ok(None)` when the file
/// was produced by a different configuration.
pub fn read_signature_cache(
    path: &std::path::Path,
    params: &DedupParams,
) -> Result<Option<Vec<MinHashSignature>>, Error> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines();
    let header: serde_json::Value = match lines.next() {
        Some(line) => serde_json::from_str(line).map_err(|e| Error::io_other(path, e.to_string()))?,
        None => return Ok(None),
    };
    if header.get("params_key").and_then(|v| v.as_u64()) != Some(params_cache_key(params)) {
        return Ok(None);
    }
    let mut signatures = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        signatures
            .push(serde_json::from_str(line).map_err(|e| Error::io_other(path, e.to_string()))?);
    }
    Ok(Some(signatures))
}
