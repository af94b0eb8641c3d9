//! RAKE codec for sparse bitstrings.
//!
//! A rake of width `R = 2^r` slides over the input. An all-zero window costs
//! a single `0` bit and advances by `R`. A window holding a set bit costs a
//! `1` followed by the r-bit offset of its first set bit, and the rake
//! restarts just after that bit. The input is conceptually zero-padded on the
//! right; the decoder stops at the recorded original length, so padding never
//! decodes as data.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::BitString;

/// Largest supported rake exponent.
pub const MAX_RAKE_EXPONENT: u8 = 15;

const SWEEP_SEED: u64 = 0x5241_4b45_5357_4550;
const SWEEP_SAMPLES_PER_DENSITY: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RakeError {
    #[error("rake exponent must be in 1..={MAX_RAKE_EXPONENT}, got {0}")]
    InvalidExponent(u8),
    #[error("rake width {width} exceeds filter size {m}")]
    WidthExceedsInput { width: usize, m: usize },
    #[error("TruncatedPayload: stream ended inside a token at bit {at}")]
    TruncatedPayload { at: usize },
    #[error("OverrunOutput: decoded data runs past {original_len} bits")]
    OverrunOutput { original_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RakeParams {
    r: u8,
}

impl RakeParams {
    pub fn new(r: u8) -> Result<Self, RakeError> {
        if r == 0 || r > MAX_RAKE_EXPONENT {
            return Err(RakeError::InvalidExponent(r));
        }
        Ok(Self { r })
    }

    /// Like [`RakeParams::new`], additionally requiring `R <= m`.
    pub fn for_filter(r: u8, m: usize) -> Result<Self, RakeError> {
        let params = Self::new(r)?;
        if params.width() > m {
            return Err(RakeError::WidthExceedsInput {
                width: params.width(),
                m,
            });
        }
        Ok(params)
    }

    pub fn exponent(&self) -> u8 {
        self.r
    }

    /// Rake width `R = 2^r`.
    pub fn width(&self) -> usize {
        1 << self.r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBits {
    pub payload: BitString,
    pub original_len: usize,
}

pub fn compress(input: &BitString, params: RakeParams) -> CompressedBits {
    let width = params.width();
    let n = input.len();
    let mut payload = BitString::with_capacity(n);
    let mut pos = 0;
    while pos < n {
        match (0..width).find(|&off| input.get(pos + off)) {
            None => {
                payload.push(false);
                pos += width;
            }
            Some(off) => {
                payload.push(true);
                payload.push_uint(off as u64, params.r as u32);
                pos += off + 1;
            }
        }
    }
    CompressedBits {
        payload,
        original_len: n,
    }
}

/// Compressed size in bits without materialising the stream.
pub fn compressed_len(input: &BitString, params: RakeParams) -> usize {
    let width = params.width();
    let token = 1 + params.r as usize;
    let mut pos = 0;
    let mut bits = 0;
    for one in input.ones() {
        // all-zero windows strictly before the window containing `one`
        let gap = one - pos;
        bits += gap / width;
        pos += (gap / width) * width;
        debug_assert!(one - pos < width);
        bits += token;
        pos = one + 1;
    }
    if pos < input.len() {
        bits += (input.len() - pos).div_ceil(width);
    }
    bits
}

pub fn decompress(c: &CompressedBits, params: RakeParams) -> Result<BitString, RakeError> {
    let (out, consumed) = decode_tokens(&c.payload, c.payload.len(), c.original_len, params)?;
    if consumed != c.payload.len() {
        return Err(RakeError::OverrunOutput {
            original_len: c.original_len,
        });
    }
    Ok(out)
}

/// Decodes a byte-packed stream whose exact bit length is unknown. Decoding
/// stops once `original_len` bits are produced; whatever follows must be
/// fewer than eight zero pad bits.
pub fn decompress_packed(
    bytes: &[u8],
    original_len: usize,
    params: RakeParams,
) -> Result<BitString, RakeError> {
    let available = bytes.len() * 8;
    let stream = BitString::unpack(bytes, available);
    let (out, consumed) = decode_tokens(&stream, available, original_len, params)?;
    let trailing = available - consumed;
    if trailing >= 8 || (consumed..available).any(|i| stream.get(i)) {
        return Err(RakeError::OverrunOutput { original_len });
    }
    Ok(out)
}

fn decode_tokens(
    stream: &BitString,
    stream_len: usize,
    original_len: usize,
    params: RakeParams,
) -> Result<(BitString, usize), RakeError> {
    let width = params.width();
    let r = params.r as usize;
    let mut out = BitString::with_capacity(original_len);
    let mut at = 0;
    while out.len() < original_len {
        if at >= stream_len {
            return Err(RakeError::TruncatedPayload { at });
        }
        let flag = stream.get(at);
        at += 1;
        if !flag {
            let zeros = width.min(original_len - out.len());
            out.extend_zeros(zeros);
            continue;
        }
        if at + r > stream_len {
            return Err(RakeError::TruncatedPayload { at });
        }
        let offset = (at..at + r).fold(0usize, |acc, i| (acc << 1) | stream.get(i) as usize);
        at += r;
        if out.len() + offset + 1 > original_len {
            return Err(RakeError::OverrunOutput { original_len });
        }
        out.extend_zeros(offset);
        out.push(true);
    }
    Ok((out, at))
}

/// Picks the rake exponent with the smallest mean compressed size over random
/// m-bit filters whose densities follow `density_profile`. Ties go to the
/// smaller exponent.
///
/// # Panics
///
/// Panics if `candidates` is empty.
pub fn sweep_rake_param(density_profile: &[f64], m: usize, candidates: &[u8]) -> u8 {
    sweep_rake_param_with(
        density_profile,
        m,
        candidates,
        SWEEP_SAMPLES_PER_DENSITY,
        SWEEP_SEED,
    )
    .best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: u8,
    /// `(r, mean compressed bits)` for every candidate, in candidate order.
    pub costs: Vec<(u8, f64)>,
}

pub fn sweep_rake_param_with(
    density_profile: &[f64],
    m: usize,
    candidates: &[u8],
    samples_per_density: usize,
    seed: u64,
) -> SweepResult {
    assert!(
        !candidates.is_empty(),
        "rake sweep needs at least one candidate"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut filters = Vec::with_capacity(density_profile.len() * samples_per_density);
    for &density in density_profile {
        let lit = (density.clamp(0.0, 1.0) * m as f64).round() as usize;
        for _ in 0..samples_per_density {
            let mut bits = BitString::zeros(m);
            for i in index::sample(&mut rng, m, lit) {
                bits.set(i);
            }
            filters.push(bits);
        }
    }

    let costs: Vec<(u8, f64)> = candidates
        .iter()
        .map(|&r| {
            let mean = match RakeParams::new(r) {
                Ok(p) if !filters.is_empty() => {
                    let total: usize = filters.iter().map(|f| compressed_len(f, p)).sum();
                    total as f64 / filters.len() as f64
                }
                Ok(_) => 0.0,
                Err(_) => f64::INFINITY,
            };
            (r, mean)
        })
        .collect();

    let mut best = costs[0];
    for &(r, cost) in &costs[1..] {
        if cost < best.1 || (cost == best.1 && r < best.0) {
            best = (r, cost);
        }
    }
    SweepResult {
        best: best.0,
        costs,
    }
}
