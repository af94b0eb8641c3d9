use crate::bits::BitString;
use crate::bloom::BloomFilter;
use crate::protocol::{PayloadProfile, ProtocolError, SessionConfig};

/// Length prefix of the provenance field, in bytes.
pub const LENGTH_PREFIX_BYTES: usize = 2;

/// A data packet carrying the provenance field at the front of its payload.
///
/// Wire layout: `[len: u16 BE, in bits][ceil(len/8) bytes, MSB-first][app payload]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenancePacket {
    pub app_payload: Vec<u8>,
    prov_len_bits: u16,
    prov_bits: Vec<u8>,
}

impl ProvenancePacket {
    pub fn with_field(app_payload: Vec<u8>, stream: &BitString) -> Result<Self, ProtocolError> {
        let prov_len_bits = u16::try_from(stream.len()).map_err(|_| {
            ProtocolError::MalformedPacket(format!(
                "provenance stream of {} bits exceeds the 16-bit length prefix",
                stream.len()
            ))
        })?;
        Ok(Self {
            app_payload,
            prov_len_bits,
            prov_bits: stream.to_bytes(),
        })
    }

    /// A fresh packet from a source vehicle, carrying the encoded empty filter.
    pub fn originate(app_payload: Vec<u8>, session: &SessionConfig) -> Result<Self, ProtocolError> {
        let empty = BloomFilter::new(session.bloom);
        Self::with_field(app_payload, &session.encoding.encode(&empty))
    }

    pub fn prov_len_bits(&self) -> u16 {
        self.prov_len_bits
    }

    pub fn prov_bits(&self) -> &[u8] {
        &self.prov_bits
    }

    pub fn field_stream(&self) -> BitString {
        BitString::unpack(&self.prov_bits, self.prov_len_bits as usize)
    }

    /// Size of the provenance field including the length prefix.
    pub fn field_bytes(&self) -> usize {
        LENGTH_PREFIX_BYTES + self.prov_bits.len()
    }

    pub fn wire_len(&self) -> usize {
        self.field_bytes() + self.app_payload.len()
    }

    pub fn fits(&self, profile: &PayloadProfile) -> bool {
        self.wire_len() <= profile.payload_bytes
    }

    pub fn check_budget(&self, profile: &PayloadProfile) -> Result<(), ProtocolError> {
        if self.fits(profile) {
            Ok(())
        } else {
            Err(ProtocolError::BudgetExceeded {
                profile: profile.name.clone(),
                needed: self.wire_len(),
                available: profile.payload_bytes,
            })
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.prov_len_bits.to_be_bytes());
        out.extend_from_slice(&self.prov_bits);
        out.extend_from_slice(&self.app_payload);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let prefix: [u8; 2] = bytes
            .get(..LENGTH_PREFIX_BYTES)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| ProtocolError::MalformedPacket("missing length prefix".into()))?;
        let prov_len_bits = u16::from_be_bytes(prefix);
        let field_end = LENGTH_PREFIX_BYTES + (prov_len_bits as usize).div_ceil(8);
        let field = bytes.get(LENGTH_PREFIX_BYTES..field_end).ok_or_else(|| {
            ProtocolError::MalformedPacket(format!(
                "provenance field of {prov_len_bits} bits truncated"
            ))
        })?;
        // validates the zero pad bits
        BitString::from_bytes(field, prov_len_bits as usize)?;
        Ok(Self {
            app_payload: bytes[field_end..].to_vec(),
            prov_len_bits,
            prov_bits: field.to_vec(),
        })
    }
}
