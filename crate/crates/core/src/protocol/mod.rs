//! Spatial-provenance message protocol.
//!
//! The RSU broadcasts a [`SessionConfig`] (segmentation, filter geometry,
//! field encoding). Each vehicle on the uplink path decodes the provenance
//! field of the packet it receives, inserts its own `(vehicle, segment)` key,
//! re-encodes the field and forwards. The RSU finally queries every
//! registered vehicle against every segment.

mod decode;
mod dictionary;
mod packet;
mod payload;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bits::{BitString, BitsError};
use crate::bloom::{BloomError, BloomFilter, ProvenanceKey};
use crate::rake::{self, RakeError, RakeParams};

pub use decode::{decode_provenance, DecodeReport};
pub use dictionary::{SegmentDictionary, SessionConfig};
pub use packet::ProvenancePacket;
pub use payload::{payload_fraction, privacy_granularity, PayloadProfile, PrivacyGranularity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("position {position} m is outside the covered road [{start}, {end})")]
    OutOfCoverage { position: f64, start: f64, end: f64 },
    #[error("provenance field needs {needed} bytes but the {profile} payload holds {available}")]
    BudgetExceeded {
        profile: String,
        needed: usize,
        available: usize,
    },
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("malformed broadcast record: {0}")]
    MalformedRecord(String),
    #[error("malformed packet: {0}")]
    MalformedPacket(String),
    #[error("vehicle {0} has not received the session broadcast")]
    NoSession(u32),
    #[error(transparent)]
    Codec(#[from] RakeError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error(transparent)]
    Bits(#[from] BitsError),
}

/// How the filter is carried in the provenance field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldEncoding {
    /// The m filter bits as is.
    Raw,
    Rake(RakeParams),
}

impl FieldEncoding {
    /// Exponent as written in the broadcast record; 0 marks [`FieldEncoding::Raw`].
    pub fn record_exponent(&self) -> u8 {
        match self {
            Self::Raw => 0,
            Self::Rake(p) => p.exponent(),
        }
    }

    pub fn from_record_exponent(r: u8) -> Result<Self, ProtocolError> {
        match r {
            0 => Ok(Self::Raw),
            r => Ok(Self::Rake(RakeParams::new(r)?)),
        }
    }

    pub fn encode(&self, filter: &BloomFilter) -> BitString {
        match self {
            Self::Raw => filter.bits().clone(),
            Self::Rake(p) => rake::compress(filter.bits(), *p).payload,
        }
    }

    pub fn decode(&self, stream: BitString, m: usize) -> Result<BitString, ProtocolError> {
        match self {
            Self::Raw => {
                if stream.len() != m {
                    return Err(ProtocolError::MalformedPacket(format!(
                        "raw field carries {} bits, expected {m}",
                        stream.len()
                    )));
                }
                Ok(stream)
            }
            Self::Rake(p) => Ok(rake::decompress(
                &rake::CompressedBits {
                    payload: stream,
                    original_len: m,
                },
                *p,
            )?),
        }
    }
}

/// A participating vehicle. Positions are fixed for the lifetime of a node.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleNode {
    pub vehicle_id: u32,
    pub position: f64,
    session: Option<SessionConfig>,
}

impl VehicleNode {
    pub fn new(vehicle_id: u32, position: f64) -> Self {
        Self {
            vehicle_id,
            position,
            session: None,
        }
    }

    /// The session this vehicle last received, if any.
    pub fn session(&self) -> Option<&SessionConfig> {
        self.session.as_ref()
    }

    /// Applies a broadcast record. The latest record replaces any earlier one.
    pub fn receive_broadcast(&mut self, record: &[u8]) -> Result<(), ProtocolError> {
        self.session = Some(SessionConfig::decode(record)?);
        Ok(())
    }

    pub fn segment(&self) -> Result<u16, ProtocolError> {
        self.session
            .as_ref()
            .ok_or(ProtocolError::NoSession(self.vehicle_id))?
            .dictionary
            .segment_of(self.position)
    }

    /// Embeds this vehicle's provenance using its own session copy.
    pub fn forward(
        &self,
        packet: &ProvenancePacket,
        profile: &PayloadProfile,
    ) -> Result<ProvenancePacket, ProtocolError> {
        let session = self
            .session
            .as_ref()
            .ok_or(ProtocolError::NoSession(self.vehicle_id))?;
        embed_and_forward(packet, self, session, profile)
    }
}

/// The road side unit: owns the session and knows the registered vehicles.
#[derive(Debug, Clone)]
pub struct Rsu {
    pub session: SessionConfig,
    pub registered: Vec<u32>,
}

impl Rsu {
    pub fn new(session: SessionConfig, registered: Vec<u32>) -> Self {
        Self {
            session,
            registered,
        }
    }

    /// Single-hop downlink of the session record to every node.
    pub fn broadcast(&self, nodes: &mut [VehicleNode]) -> Result<(), ProtocolError> {
        let record = self.session.encode()?;
        for node in nodes {
            node.receive_broadcast(&record)?;
        }
        Ok(())
    }

    pub fn read_filter(&self, packet: &ProvenancePacket) -> Result<BloomFilter, ProtocolError> {
        read_filter(packet, &self.session)
    }

    pub fn receive(&self, packet: &ProvenancePacket) -> Result<DecodeReport, ProtocolError> {
        let filter = self.read_filter(packet)?;
        Ok(decode_provenance(
            &filter,
            &self.registered,
            &self.session.dictionary,
        ))
    }
}

pub fn read_filter(
    packet: &ProvenancePacket,
    session: &SessionConfig,
) -> Result<BloomFilter, ProtocolError> {
    let bits = session
        .encoding
        .decode(packet.field_stream(), session.bloom.m())?;
    Ok(BloomFilter::from_bits(session.bloom, bits)?)
}

/// Result of one embed step, with the quantities the experiment harness records.
#[derive(Debug, Clone)]
pub struct HopTrace {
    pub packet: ProvenancePacket,
    pub lit_count: usize,
    /// Bits of the encoded filter, excluding the length prefix.
    pub field_bits: usize,
    /// Time spent decoding and re-encoding the field (zero when untimed).
    pub codec_time: Duration,
    pub within_budget: bool,
}

/// Decode, insert, re-encode. The budget is reported, not enforced.
pub fn embed_traced(
    packet: &ProvenancePacket,
    node: &VehicleNode,
    session: &SessionConfig,
    profile: &PayloadProfile,
    timed: bool,
) -> Result<HopTrace, ProtocolError> {
    let segment = session.dictionary.segment_of(node.position)?;
    let key = ProvenanceKey::new(node.vehicle_id, segment);

    let start = timed.then(Instant::now);
    let mut filter = read_filter(packet, session)?;
    let mut codec_time = start.map(|s| s.elapsed()).unwrap_or_default();

    filter.insert(&key);

    let start = timed.then(Instant::now);
    let stream = session.encoding.encode(&filter);
    let out = ProvenancePacket::with_field(packet.app_payload.clone(), &stream)?;
    codec_time += start.map(|s| s.elapsed()).unwrap_or_default();

    Ok(HopTrace {
        within_budget: out.fits(profile),
        lit_count: filter.lit_count(),
        field_bits: stream.len(),
        packet: out,
        codec_time,
    })
}

/// One forwarding step: `decompress -> insert -> compress -> rewrite length`.
pub fn embed_and_forward(
    packet: &ProvenancePacket,
    node: &VehicleNode,
    session: &SessionConfig,
    profile: &PayloadProfile,
) -> Result<ProvenancePacket, ProtocolError> {
    let trace = embed_traced(packet, node, session, profile, false)?;
    trace.packet.check_budget(profile)?;
    Ok(trace.packet)
}
