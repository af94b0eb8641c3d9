//! Growable bit sequence with an MSB-first byte packing.
//!
//! Both the Bloom filter and the RAKE stream travel as `BitString`s. Index 0
//! maps to the most significant bit of byte 0 when packed; trailing pad bits
//! in the final byte are always zero.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("expected {expected} bytes for {bits} bits, got {actual}")]
    Length {
        bits: usize,
        expected: usize,
        actual: usize,
    },
    #[error("pad bits after bit {bits} must be zero")]
    NonZeroPadding { bits: usize },
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            bits: Vec::with_capacity(capacity),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Returns the bit at `index`, or `false` past the end (implicit zero padding).
    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits.get(index).copied().unwrap_or(false)
    }

    #[inline]
    pub fn set(&mut self, index: usize) {
        self.bits[index] = true;
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: u32) {
        for shift in (0..width).rev() {
            self.bits.push((value >> shift) & 1 == 1);
        }
    }

    pub fn extend_zeros(&mut self, count: usize) {
        self.bits.resize(self.bits.len() + count, false);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Packed length in bytes.
    pub fn byte_len(&self) -> usize {
        self.bits.len().div_ceil(8)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.byte_len()];
        for i in self.ones() {
            out[i / 8] |= 0x80 >> (i % 8);
        }
        out
    }

    /// Unpacks exactly `len` bits. The byte count must be `ceil(len / 8)` and
    /// pad bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, BitsError> {
        let expected = len.div_ceil(8);
        if bytes.len() != expected {
            return Err(BitsError::Length {
                bits: len,
                expected,
                actual: bytes.len(),
            });
        }
        let bits = Self::unpack(bytes, bytes.len() * 8);
        if bits.bits[len..].iter().any(|&b| b) {
            return Err(BitsError::NonZeroPadding { bits: len });
        }
        Ok(Self {
            bits: bits.bits[..len].to_vec(),
        })
    }

    /// Unpacks the first `len` bits of `bytes` without any length or padding checks.
    pub fn unpack(bytes: &[u8], len: usize) -> Self {
        let bits = (0..len)
            .map(|i| bytes.get(i / 8).is_some_and(|b| b & (0x80 >> (i % 8)) != 0))
            .collect();
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters; `_` and whitespace are ignored.
    pub fn parse_binary(s: &str) -> Result<Self, BitsError> {
        let mut out = Self::new();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                '_' => {}
                c if c.is_whitespace() => {}
                c => return Err(BitsError::InvalidChar(c)),
            }
        }
        Ok(out)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}: {})", self.len(), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_msb_first_with_zero_pad() {
        let b = BitString::parse_binary("1000_0000_01").unwrap();
        assert_eq!(b.to_bytes(), vec![0x80, 0x40]);
        assert_eq!(BitString::from_bytes(&[0x80, 0x40], 10).unwrap(), b);
    }

    #[test]
    fn rejects_dirty_padding_and_bad_length() {
        assert_eq!(
            BitString::from_bytes(&[0x01], 4),
            Err(BitsError::NonZeroPadding { bits: 4 })
        );
        assert!(matches!(
            BitString::from_bytes(&[0, 0], 4),
            Err(BitsError::Length { expected: 1, .. })
        ));
    }

    #[test]
    fn push_uint_is_big_endian() {
        let mut b = BitString::new();
        b.push_uint(0b011, 3);
        b.push_uint(2, 2);
        assert_eq!(b.to_string(), "01110");
    }

    #[test]
    fn get_past_end_reads_zero() {
        let b = BitString::parse_binary("1").unwrap();
        assert!(b.get(0));
        assert!(!b.get(7));
    }
}
