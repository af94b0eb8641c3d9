//! Road segmentation and the session record the RSU broadcasts.

use std::collections::HashSet;

use crate::bloom::BloomParams;
use crate::protocol::{FieldEncoding, ProtocolError};
use crate::rake::RakeParams;

/// The RSU's partition of its road into `S` equal half-open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDictionary {
    road_origin: f64,
    road_length: f64,
    segment_ids: Vec<u16>,
}

impl SegmentDictionary {
    pub fn new(
        road_origin: f64,
        road_length: f64,
        segment_ids: Vec<u16>,
    ) -> Result<Self, ProtocolError> {
        if !road_origin.is_finite() {
            return Err(ProtocolError::InvalidDictionary(
                "road origin must be finite".into(),
            ));
        }
        if !(road_length.is_finite() && road_length > 0.0) {
            return Err(ProtocolError::InvalidDictionary(format!(
                "road length must be positive, got {road_length}"
            )));
        }
        if segment_ids.is_empty() {
            return Err(ProtocolError::InvalidDictionary(
                "at least one segment is required".into(),
            ));
        }
        if segment_ids.len() > u16::MAX as usize {
            return Err(ProtocolError::InvalidDictionary(format!(
                "at most {} segments fit the broadcast record",
                u16::MAX
            )));
        }
        let mut seen = HashSet::with_capacity(segment_ids.len());
        if let Some(dup) = segment_ids.iter().find(|id| !seen.insert(**id)) {
            return Err(ProtocolError::InvalidDictionary(format!(
                "duplicate segment id {dup}"
            )));
        }
        Ok(Self {
            road_origin,
            road_length,
            segment_ids,
        })
    }

    /// `num_segments` segments over `[origin, origin + length)` with ids `0..S`.
    pub fn uniform(
        road_origin: f64,
        road_length: f64,
        num_segments: u16,
    ) -> Result<Self, ProtocolError> {
        Self::new(road_origin, road_length, (0..num_segments).collect())
    }

    pub fn road_origin(&self) -> f64 {
        self.road_origin
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    pub fn num_segments(&self) -> usize {
        self.segment_ids.len()
    }

    pub fn segment_ids(&self) -> &[u16] {
        &self.segment_ids
    }

    pub fn segment_length(&self) -> f64 {
        self.road_length / self.num_segments() as f64
    }

    /// `[start, end)` of the segment at `index`.
    pub fn interval(&self, index: usize) -> (f64, f64) {
        let len = self.segment_length();
        (
            self.road_origin + index as f64 * len,
            self.road_origin + (index + 1) as f64 * len,
        )
    }

    pub fn segment_of(&self, position: f64) -> Result<u16, ProtocolError> {
        let offset = position - self.road_origin;
        if !(offset >= 0.0 && offset < self.road_length) {
            return Err(ProtocolError::OutOfCoverage {
                position,
                start: self.road_origin,
                end: self.road_origin + self.road_length,
            });
        }
        let s = self.num_segments();
        let index = ((offset * s as f64 / self.road_length).floor() as usize).min(s - 1);
        Ok(self.segment_ids[index])
    }
}

/// Everything the RSU hands out in the broadcast phase: segmentation,
/// filter geometry and the field encoding. None of it travels per packet.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub dictionary: SegmentDictionary,
    pub bloom: BloomParams,
    pub encoding: FieldEncoding,
}

impl SessionConfig {
    pub fn new(
        dictionary: SegmentDictionary,
        bloom: BloomParams,
        encoding: FieldEncoding,
    ) -> Result<Self, ProtocolError> {
        if let FieldEncoding::Rake(rake) = encoding {
            RakeParams::for_filter(rake.exponent(), bloom.m())?;
        }
        Ok(Self {
            dictionary,
            bloom,
            encoding,
        })
    }

    /// Big-endian record: origin f64, length f64, S u16, S x id u16, m u16,
    /// k u8, seed u64, r u8 (`r = 0` for the uncompressed field).
    pub fn encode(&self) -> Result<Vec<u8>, ProtocolError> {
        let m = u16::try_from(self.bloom.m()).map_err(|_| {
            ProtocolError::InvalidDictionary(format!(
                "filter size {} does not fit the record",
                self.bloom.m()
            ))
        })?;
        let k = u8::try_from(self.bloom.k()).map_err(|_| {
            ProtocolError::InvalidDictionary(format!(
                "hash count {} does not fit the record",
                self.bloom.k()
            ))
        })?;
        let ids = self.dictionary.segment_ids();
        let mut out = Vec::with_capacity(8 + 8 + 2 + 2 * ids.len() + 2 + 1 + 8 + 1);
        out.extend_from_slice(&self.dictionary.road_origin().to_be_bytes());
        out.extend_from_slice(&self.dictionary.road_length().to_be_bytes());
        out.extend_from_slice(&(ids.len() as u16).to_be_bytes());
        for id in ids {
            out.extend_from_slice(&id.to_be_bytes());
        }
        out.extend_from_slice(&m.to_be_bytes());
        out.push(k);
        out.extend_from_slice(&self.bloom.seed().to_be_bytes());
        out.push(self.encoding.record_exponent());
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut rd = Reader { bytes, at: 0 };
        let origin = f64::from_be_bytes(rd.take()?);
        let length = f64::from_be_bytes(rd.take()?);
        let s = u16::from_be_bytes(rd.take()?);
        let ids = (0..s)
            .map(|_| rd.take().map(u16::from_be_bytes))
            .collect::<Result<Vec<_>, _>>()?;
        let m = u16::from_be_bytes(rd.take()?);
        let [k] = rd.take()?;
        let seed = u64::from_be_bytes(rd.take()?);
        let [r] = rd.take()?;
        if rd.at != bytes.len() {
            return Err(ProtocolError::MalformedRecord(format!(
                "{} trailing bytes",
                bytes.len() - rd.at
            )));
        }
        let dictionary = SegmentDictionary::new(origin, length, ids)?;
        let bloom = BloomParams::new(m as usize, k as usize, seed)?;
        let encoding = FieldEncoding::from_record_exponent(r)?;
        Self::new(dictionary, bloom, encoding)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ProtocolError> {
        let end = self.at + N;
        let chunk = self.bytes.get(self.at..end).ok_or_else(|| {
            ProtocolError::MalformedRecord(format!("record truncated at byte {}", self.at))
        })?;
        self.at = end;
        Ok(chunk.try_into().expect("slice length checked"))
    }
}
