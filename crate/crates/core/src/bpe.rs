//! Byte-pair-encoding tokenizer: greedy pair merging to a target
//! vocabulary, used for all token accounting (document lengths, mix
//! quantities, histograms).
//!
//! Base symbols are the 256 bytes plus every multi-byte scalar seen in
//! the training corpus as an atomic token; scalars unseen at training
//! time fall back to their UTF-8 bytes, so encoding never fails and
//! decode(encode(t)) == t for any text. Merge selection is greedy by
//! pair frequency with a lexicographic tie-break, which makes merge
//! lists reproducible down to the byte.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Anything that can turn text into token ids.
pub trait Tokenizer: Sync {
    fn encode(&self, text: &str) -> Vec<u32>;

    fn token_count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// One scalar = one token; id is the code point. For tests and for
/// pipelines where BPE is irrelevant.
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        text.chars().map(u32::from).collect()
    }

    fn token_count(&self, text: &str) -> usize {
        text.chars().count()
    }
}

/// Trained BPE model: vocabulary (token bytes -> dense id) and the
/// ordered merge list that reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct BpeModel {
    tokens: Vec<Vec<u8>>,
    token_ids: HashMap<Vec<u8>, u32>,
    merges: Vec<(u32, u32)>,
    /// Rank per merged pair, for fast encoding.
    merge_rank: HashMap<(u32, u32), u32>,
    pub target_vocab: usize,
}

impl BpeModel {
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn merges(&self) -> impl Iterator<Item = (&[u8], &[u8])> {
        self.merges
            .iter()
            .map(|&(l, r)| (self.tokens[l as usize].as_slice(), self.tokens[r as usize].as_slice()))
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    /// Initial symbol sequence: atomic tokens for known multi-byte
    /// scalars, raw bytes otherwise.
    fn base_sequence(&self, text: &str) -> Vec<u32> {
        let mut seq = Vec::with_capacity(text.len());
        let mut buf = [0u8; 4];
        for c in text.chars() {
            let encoded = c.encode_utf8(&mut buf).as_bytes();
            if encoded.len() == 1 {
                seq.push(u32::from(encoded[0]));
            } else if let Some(&id) = self.token_ids.get(encoded) {
                seq.push(id);
            } else {
                seq.extend(encoded.iter().map(|&b| u32::from(b)));
            }
        }
        seq
    }

    /// Apply the merge list (in listed order; absent merges are no-ops)
    /// by repeatedly merging the present pair with the lowest rank.
    fn apply_merges(&self, seq: &mut Vec<u32>) {
        while seq.len() >= 2 {
            let mut best: Option<(u32, usize)> = None;
            for i in 0..seq.len() - 1 {
                if let Some(&rank) = self.merge_rank.get(&(seq[i], seq[i + 1])) {
                    if best.is_none_or(|(r, _)| rank < r) {
                        best = Some((rank, i));
                    }
                }
            }
            let Some((rank, _)) = best else { break };
            let (left, right) = self.merges[rank as usize];
            let merged = self.token_ids
                [&[self.tokens[left as usize].clone(), self.tokens[right as usize].clone()].concat()];
            // left-to-right, non-overlapping
            let mut out = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
                    out.push(merged);
                    i += 2;
                } else {
                    out.push(seq[i]);
                    i += 1;
                }
            }
            *seq = out;
        }
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, Error> {
        let mut bytes = Vec::new();
        for &id in ids {
            match self.tokens.get(id as usize) {
                Some(token) => bytes.extend_from_slice(token),
                None => {
                    return Err(Error::Model(format!(
                        "token id {id} out of range (vocab size {})",
                        self.tokens.len()
                    )))
                }
            }
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    // -- text model format --------------------------------------------
    //
    //   zhbpe v1 vocab=<n> merges=<m>
    //   <token>\t<id>          (n lines)
    //   #merges
    //   <left>\t<right>        (m lines, in merge order)
    //
    // Tokens containing control bytes, tabs, backslashes or invalid
    // UTF-8 are written fully escaped as \xNN sequences.

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut out = String::new();
        out.push_str(&format!(
            "zhbpe v1 vocab={} merges={}\n",
            self.tokens.len(),
            self.merges.len()
        ));
        for (id, token) in self.tokens.iter().enumerate() {
            out.push_str(&escape_token(token));
            out.push('\t');
            out.push_str(&id.to_string());
            out.push('\n');
        }
        out.push_str("#merges\n");
        for &(l, r) in &self.merges {
            out.push_str(&escape_token(&self.tokens[l as usize]));
            out.push('\t');
            out.push_str(&escape_token(&self.tokens[r as usize]));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = content.lines();
        let header = lines.next().unwrap_or_default();
        if !header.starts_with("zhbpe v1 ") {
            return Err(Error::Model(format!("{}: not a bpe model file", path.display())));
        }
        let mut tokens: Vec<Vec<u8>> = Vec::new();
        let mut token_ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut merges: Vec<(u32, u32)> = Vec::new();
        let mut in_merges = false;
        for line in lines {
            if line == "#merges" {
                in_merges = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (a, b) = match (fields.next(), fields.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Model(format!("{}: malformed line {line:?}", path.display()))),
            };
            if in_merges {
                let left = unescape_token(a)?;
                let right = unescape_token(b)?;
                let (Some(&l), Some(&r)) = (token_ids.get(&left), token_ids.get(&right)) else {
                    return Err(Error::Model(format!("{}: merge references unknown token", path.display())));
                };
                if !token_ids.contains_key(&[left, right].concat()) {
                    return Err(Error::Model(format!(
                        "{}: merge result missing from vocabulary",
                        path.display()
                    )));
                }
                merges.push((l, r));
            } else {
                let token = unescape_token(a)?;
                let id: u32 = b
                    .parse()
                    .map_err(|_| Error::Model(format!("{}: bad token id {b:?}", path.display())))?;
                if id as usize != tokens.len() {
                    return Err(Error::Model(format!(
                        "{}: token ids must be dense and in order",
                        path.display()
                    )));
                }
                token_ids.insert(token.clone(), id);
                tokens.push(token);
            }
        }
        let merge_rank = merges
            .iter()
            .enumerate()
            .map(|(rank, &pair)| (pair, rank as u32))
            .collect();
        let target_vocab = tokens.len();
        Ok(BpeModel { tokens, token_ids, merges, merge_rank, target_vocab })
    }
}

impl Tokenizer for BpeModel {
    fn encode(&self, text: &str) -> Vec<u32> {
        let mut seq = self.base_sequence(text);
        self.apply_merges(&mut seq);
        seq
    }
}

fn escape_token(token: &[u8]) -> String {
    let needs_escape = std::str::from_utf8(token)
        .map(|s| s.chars().any(|c| c.is_control() || c == '\\'))
        .unwrap_or(true);
    if needs_escape {
        token.iter().map(|b| format!("\\x{b:02x}")).collect()
    } else {
        String::from_utf8(token.to_vec()).expect("checked above")
    }
}

fn unescape_token(text: &str) -> Result<Vec<u8>, Error> {
    if !text.contains('\\') {
        return Ok(text.as_bytes().to_vec());
    }
    let mut bytes = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '\\' {
            if chars.get(i + 1) == Some(&'x') && i + 3 < chars.len() {
                let hex: String = chars[i + 2..i + 4].iter().collect();
                let byte = u8::from_str_radix(&hex, 16)
                    .map_err(|_| Error::Model(format!("bad escape in token {text:?}")))?;
                bytes.push(byte);
                i += 4;
            } else {
                return Err(Error::Model(format!("bad escape in token {text:?}")));
            }
        } else {
            let mut buf = [0u8; 4];
            bytes.extend_from_slice(chars[i].encode_utf8(&mut buf).as_bytes());
            i += 1;
        }
    }
    Ok(bytes)
}

/// Train by standard greedy BPE: repeatedly merge the most frequent
/// adjacent symbol pair (ties broken by lexicographic order on the
/// pair's byte strings) until the vocabulary reaches `target_vocab` or
/// no pair occurs at least twice.
pub fn train_bpe(corpus: &[String], target_vocab: usize) -> Result<BpeModel, Error> {
    if corpus.is_empty() || corpus.iter().all(|d| d.is_empty()) {
        return Err(Error::Config("bpe training corpus is empty".into()));
    }

    // base alphabet: 256 bytes + multi-byte scalars present in corpus
    let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut multibyte: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut buf = [0u8; 4];
    for doc in corpus {
        for c in doc.chars() {
            let encoded = c.encode_utf8(&mut buf).as_bytes();
            if encoded.len() > 1 {
                multibyte.insert(encoded.to_vec());
            }
        }
    }
    tokens.extend(multibyte);
    let mut token_ids: HashMap<Vec<u8>, u32> =
        tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

    if target_vocab <= tokens.len() {
        return Err(Error::Config(format!(
            "target_vocab {target_vocab} must exceed the base alphabet size {}",
            tokens.len()
        )));
    }

    let mut sequences: Vec<Vec<u32>> = corpus
        .iter()
        .filter(|d| !d.is_empty())
        .map(|doc| {
            let mut seq = Vec::with_capacity(doc.len());
            for c in doc.chars() {
                let encoded = c.encode_utf8(&mut buf).as_bytes();
                seq.push(token_ids[encoded]);
            }
            seq
        })
        .collect();

    let mut merges: Vec<(u32, u32)> = Vec::new();
    while tokens.len() < target_vocab {
        let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
        for seq in &sequences {
            for w in seq.windows(2) {
                *pair_counts.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        let best = pair_counts
            .iter()
            .filter(|&(_, &count)| count >= 2)
            .max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    // lexicographically SMALLEST pair wins a frequency tie
                    let key_a = (&tokens[pa.0 as usize], &tokens[pa.1 as usize]);
                    let key_b = (&tokens[pb.0 as usize], &tokens[pb.1 as usize]);
                    key_b.cmp(&key_a)
                })
            })
            .map(|(&pair, _)| pair);
        let Some((left, right)) = best else { break };

        let merged: Vec<u8> =
            [tokens[left as usize].clone(), tokens[right as usize].clone()].concat();
        let new_id = tokens.len() as u32;
        token_ids.insert(merged.clone(), new_id);
        tokens.push(merged);
        merges.push((left, right));

        for seq in &mut sequences {
            if seq.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(seq[i]);
                    i += 1;
                }
            }
            *seq = out;
        }
    }

    let merge_rank = merges
        .iter()
        .enumerate()
        .map(|(rank, &pair)| (pair, rank as u32))
        .collect();
    Ok(BpeModel { tokens, token_ids, merges, merge_rank, target_vocab })
}

/// Exact token accounting over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub total: u64,
    pub doc_count: u64,
    /// total / doc_count; 0 with `empty = true` for an empty corpus.
    pub mean_doc_len: f64,
    pub empty: bool,
    /// bucket start (inclusive, multiples of `bucket_width`) -> docs
    pub histogram: BTreeMap<u64, u64>,
    pub bucket_width: u64,
}

/// Token totals, mean document length and a bucketed length histogram.
pub fn count_tokens<T: Tokenizer>(corpus: &[String], tokenizer: &T, bucket_width: u64) -> TokenStats {
    let bucket_width = bucket_width.max(1);
    let lengths: Vec<u64> = corpus
        .par_iter()
        .map(|doc| tokenizer.token_count(doc) as u64)
        .collect();
    let total: u64 = lengths.iter().sum();
    let doc_count = lengths.len() as u64;
    let mut histogram = BTreeMap::new();
    for len in &lengths {
        *histogram.entry((len / bucket_width) * bucket_width).or_insert(0) += 1;
    }
    let empty = doc_count == 0;
    TokenStats {
        total,
        doc_count,
        mean_doc_len: if empty { 0.0 } else { total as f64 / doc_count as f64 },
        empty,
        histogram,
        bucket_width,
    }
}
