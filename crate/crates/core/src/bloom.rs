//! Shared provenance Bloom filter.
//!
//! Every forwarding vehicle inserts its `(vehicle_id, segment_id)` pair into
//! the same filter, so the filter accumulates the whole path. Index `j` of a
//! key is `SipHash-2-4(key = (seed, j), canonical key bytes) mod m`, giving k
//! independent hash functions fixed by a single 64-bit seed.

use std::hash::Hasher;

use siphasher::sip::SipHasher24;
use thiserror::Error;

use crate::bits::{BitString, BitsError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BloomError {
    #[error("filter size m must be at least 1")]
    ZeroSize,
    #[error("hash count k must be at least 1")]
    ZeroHashes,
    #[error("hash count k must be <= m (k={k}, m={m})")]
    TooManyHashes { m: usize, k: usize },
    #[error("filter of {expected} bits cannot hold a {actual}-bit image")]
    SizeMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

/// Filter geometry and hash family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BloomParams {
    m: usize,
    k: usize,
    seed: u64,
}

impl BloomParams {
    pub fn new(m: usize, k: usize, seed: u64) -> Result<Self, BloomError> {
        if m == 0 {
            return Err(BloomError::ZeroSize);
        }
        if k == 0 {
            return Err(BloomError::ZeroHashes);
        }
        if k > m {
            return Err(BloomError::TooManyHashes { m, k });
        }
        Ok(Self { m, k, seed })
    }

    /// Filter size in bits.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of hash functions.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// What a vehicle embeds: who it is and which road segment it occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProvenanceKey {
    pub vehicle_id: u32,
    pub segment_id: u16,
}

impl ProvenanceKey {
    pub const ENCODED_LEN: usize = 6;

    pub fn new(vehicle_id: u32, segment_id: u16) -> Self {
        Self {
            vehicle_id,
            segment_id,
        }
    }

    /// 4-byte big-endian vehicle id followed by 2-byte big-endian segment id.
    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..4].copy_from_slice(&self.vehicle_id.to_be_bytes());
        out[4..].copy_from_slice(&self.segment_id.to_be_bytes());
        out
    }
}

/// Bit positions for `key`, one per hash function, in hash order.
pub fn hash_indices(params: &BloomParams, key: &ProvenanceKey) -> Vec<usize> {
    let bytes = key.to_bytes();
    (0..params.k)
        .map(|j| {
            let mut hasher = SipHasher24::new_with_keys(params.seed, j as u64);
            hasher.write(&bytes);
            (hasher.finish() % params.m as u64) as usize
        })
        .collect()
}

/// Standard estimate `(1 - (1 - 1/m)^(n k))^k` of the false-positive rate
/// after `n_inserted` distinct insertions.
pub fn false_positive_probability(params: &BloomParams, n_inserted: usize) -> f64 {
    if n_inserted == 0 {
        return 0.0;
    }
    let m = params.m as f64;
    let k = params.k as f64;
    let miss = (1.0 - 1.0 / m).powf(n_inserted as f64 * k);
    (1.0 - miss).powf(k)
}

/// Expected lit bits after `n_inserted` insertions: `m (1 - (1 - 1/m)^(n k))`.
pub fn expected_lit_count(params: &BloomParams, n_inserted: usize) -> f64 {
    let m = params.m as f64;
    m * (1.0 - (1.0 - 1.0 / m).powf((n_inserted * params.k) as f64))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    params: BloomParams,
    bits: BitString,
}

impl BloomFilter {
    pub fn new(params: BloomParams) -> Self {
        Self {
            params,
            bits: BitString::zeros(params.m),
        }
    }

    /// Wraps an existing m-bit image, e.g. the output of a decompressor.
    pub fn from_bits(params: BloomParams, bits: BitString) -> Result<Self, BloomError> {
        if bits.len() != params.m {
            return Err(BloomError::SizeMismatch {
                expected: params.m,
                actual: bits.len(),
            });
        }
        Ok(Self { params, bits })
    }

    pub fn from_bytes(params: BloomParams, bytes: &[u8]) -> Result<Self, BloomError> {
        let bits = BitString::from_bytes(bytes, params.m)?;
        Ok(Self { params, bits })
    }

    /// `ceil(m / 8)` bytes, index 0 in the MSB of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.to_bytes()
    }

    pub fn params(&self) -> &BloomParams {
        &self.params
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn into_bits(self) -> BitString {
        self.bits
    }

    pub fn insert(&mut self, key: &ProvenanceKey) {
        for i in hash_indices(&self.params, key) {
            self.bits.set(i);
        }
    }

    pub fn query(&self, key: &ProvenanceKey) -> bool {
        hash_indices(&self.params, key)
            .into_iter()
            .all(|i| self.bits.get(i))
    }

    pub fn lit_count(&self) -> usize {
        self.bits.count_ones()
    }

    /// Fraction of lit bits.
    pub fn density(&self) -> f64 {
        self.lit_count() as f64 / self.params.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, k: usize) -> BloomParams {
        BloomParams::new(m, k, 0).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert_eq!(BloomParams::new(0, 1, 0), Err(BloomError::ZeroSize));
        assert_eq!(BloomParams::new(8, 0, 0), Err(BloomError::ZeroHashes));
        assert_eq!(
            BloomParams::new(4, 5, 0),
            Err(BloomError::TooManyHashes { m: 4, k: 5 })
        );
    }

    #[test]
    fn key_encoding_is_big_endian() {
        let key = ProvenanceKey::new(0x0102_0304, 0x0506);
        assert_eq!(key.to_bytes(), [1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn single_bit_filter_maps_everything_to_zero() {
        let p = params(1, 1);
        for v in 0..20 {
            assert_eq!(hash_indices(&p, &ProvenanceKey::new(v, 7)), vec![0]);
        }
    }

    #[test]
    fn indices_are_deterministic_and_in_range() {
        let p = params(100, 8);
        let key = ProvenanceKey::new(3, 2);
        let a = hash_indices(&p, &key);
        assert_eq!(a, hash_indices(&p, &key));
        assert_eq!(a.len(), 8);
        assert!(a.iter().all(|&i| i < 100));
    }

    #[test]
    fn seed_changes_the_hash_family() {
        let key = ProvenanceKey::new(3, 2);
        let a = hash_indices(&BloomParams::new(1000, 8, 0).unwrap(), &key);
        let b = hash_indices(&BloomParams::new(1000, 8, 1).unwrap(), &key);
        assert_ne!(a, b);
    }

    #[test]
    fn insert_is_idempotent_and_bounded() {
        let mut f = BloomFilter::new(params(100, 8));
        let key = ProvenanceKey::new(3, 2);
        f.insert(&key);
        let lit = f.lit_count();
        assert!((1..=8).contains(&lit));
        let snapshot = f.clone();
        f.insert(&key);
        assert_eq!(f, snapshot);
    }

    #[test]
    fn empty_filter_queries_false() {
        let f = BloomFilter::new(params(100, 8));
        assert!(!f.query(&ProvenanceKey::new(3, 2)));
        assert_eq!(f.lit_count(), 0);
    }

    #[test]
    fn lit_count_counts_set_bits() {
        let mut bits = BitString::zeros(100);
        bits.set(0);
        bits.set(99);
        let f = BloomFilter::from_bits(params(100, 8), bits).unwrap();
        assert_eq!(f.lit_count(), 2);
        assert_eq!(f.to_bytes().len(), 13);
        assert_eq!(f.to_bytes()[0], 0x80);
        assert_eq!(f.to_bytes()[12], 0x10);
    }

    #[test]
    fn from_bits_checks_size() {
        assert_eq!(
            BloomFilter::from_bits(params(100, 8), BitString::zeros(99)),
            Err(BloomError::SizeMismatch {
                expected: 100,
                actual: 99
            })
        );
    }

    #[test]
    fn fpp_edge_cases() {
        let p = params(100, 8);
        assert_eq!(false_positive_probability(&p, 0), 0.0);
        let five = false_positive_probability(&p, 5);
        // (1 - 0.99^40)^8
        assert!((five - 1.441_850_973_381e-4).abs() < 1e-12, "{five}");
        assert!(false_positive_probability(&p, 1) < five);
    }
}
