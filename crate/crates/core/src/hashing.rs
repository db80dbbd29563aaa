//! Seeded hashing used everywhere determinism matters: document ids,
//! shingles, MinHash families, feature buckets and shard checksums.
//!
//! All hashes are fixed across platform and process; nothing here depends
//! on `std::collections` hasher randomization.

use sha2::{Digest, Sha256};

/// splitmix64 finalizer. Bijective avalanche over u64.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Seeded 64-bit hash of a byte string (FNV-1a core + avalanche finish).
#[inline]
pub fn hash64(data: &[u8], seed: u64) -> u64 {
    let mut h = seed ^ 0xcbf2_9ce4_8422_2325;
    for &b in data {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// Member `i` of a seeded hash family applied to an already-hashed item.
#[inline]
pub fn rehash64(item: u64, seed: u64) -> u64 {
    mix64(item ^ seed)
}

/// Derive a deterministic sub-seed from a master seed and a stream index.
#[inline]
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix64(master ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(stream.wrapping_add(1)))
}

/// 128-bit content hash rendered as 32 lowercase hex chars.
///
/// Truncated SHA-256 over the raw bytes; used for `Document::id`.
pub fn content_hash_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(32);
    for byte in &digest[..16] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
