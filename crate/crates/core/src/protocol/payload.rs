use crate::protocol::{ProtocolError, SegmentDictionary};

/// Application payload capacity of a radio frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadProfile {
    pub name: String,
    pub payload_bytes: usize,
}

impl PayloadProfile {
    pub const ZIGBEE_BYTES: usize = 255;
    pub const LORA_DR7_BYTES: usize = 222;

    pub fn zigbee() -> Self {
        Self {
            name: "zigbee".into(),
            payload_bytes: Self::ZIGBEE_BYTES,
        }
    }

    /// LoRa at data rate 7.
    pub fn lora_dr7() -> Self {
        Self {
            name: "lora".into(),
            payload_bytes: Self::LORA_DR7_BYTES,
        }
    }

    pub fn custom(name: impl Into<String>, payload_bytes: usize) -> Result<Self, ProtocolError> {
        let name = name.into();
        if payload_bytes == 0 {
            return Err(ProtocolError::InvalidDictionary(format!(
                "payload profile {name} must hold at least one byte"
            )));
        }
        Ok(Self {
            name,
            payload_bytes,
        })
    }

    /// `zigbee`, `lora`, or `<name>:<bytes>`.
    pub fn parse(s: &str) -> Result<Self, ProtocolError> {
        match s.trim() {
            "zigbee" => Ok(Self::zigbee()),
            "lora" | "lora_dr7" => Ok(Self::lora_dr7()),
            other => {
                let (name, bytes) = other.split_once(':').ok_or_else(|| {
                    ProtocolError::InvalidDictionary(format!(
                        "unknown payload profile {other:?} (expected zigbee, lora or name:bytes)"
                    ))
                })?;
                let bytes = bytes.trim().parse::<usize>().map_err(|e| {
                    ProtocolError::InvalidDictionary(format!("payload bytes {bytes:?}: {e}"))
                })?;
                Self::custom(name.trim(), bytes)
            }
        }
    }

    pub fn spec_string(&self) -> String {
        match (self.name.as_str(), self.payload_bytes) {
            ("zigbee", Self::ZIGBEE_BYTES) => "zigbee".into(),
            ("lora", Self::LORA_DR7_BYTES) => "lora".into(),
            (name, bytes) => format!("{name}:{bytes}"),
        }
    }
}

/// Percentage of the frame payload taken by a provenance field of
/// `prov_field_bits`, rounded up to whole bytes.
pub fn payload_fraction(
    prov_field_bits: usize,
    profile: &PayloadProfile,
) -> Result<f64, ProtocolError> {
    let bytes = prov_field_bits.div_ceil(8);
    if bytes > profile.payload_bytes {
        return Err(ProtocolError::BudgetExceeded {
            profile: profile.name.clone(),
            needed: bytes,
            available: profile.payload_bytes,
        });
    }
    Ok(100.0 * bytes as f64 / profile.payload_bytes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyGranularity {
    /// Segment length in meters.
    pub absolute: f64,
    /// Segment length as a fraction of coverage, `1 / S`.
    pub normalized: f64,
}

pub fn privacy_granularity(dict: &SegmentDictionary, coverage_length: f64) -> PrivacyGranularity {
    let s = dict.num_segments() as f64;
    PrivacyGranularity {
        absolute: coverage_length / s,
        normalized: 1.0 / s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pct(bits: usize, p: &PayloadProfile) -> String {
        format!("{:.1}", payload_fraction(bits, p).unwrap())
    }

    #[test]
    fn compressed_field_fractions() {
        assert_eq!(pct(77, &PayloadProfile::zigbee()), "3.9");
        assert_eq!(pct(77, &PayloadProfile::lora_dr7()), "4.5");
    }

    #[test]
    fn uncompressed_field_fractions() {
        assert_eq!(pct(100, &PayloadProfile::zigbee()), "5.1");
        assert_eq!(pct(100, &PayloadProfile::lora_dr7()), "5.9");
    }

    #[test]
    fn over_budget() {
        let p = PayloadProfile::custom("tiny", 2).unwrap();
        assert!(matches!(
            payload_fraction(17, &p),
            Err(ProtocolError::BudgetExceeded { needed: 3, .. })
        ));
        assert_eq!(payload_fraction(16, &p).unwrap(), 100.0);
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(PayloadProfile::parse("zigbee").unwrap().payload_bytes, 255);
        assert_eq!(PayloadProfile::parse("lora").unwrap().payload_bytes, 222);
        let c = PayloadProfile::parse("ble:27").unwrap();
        assert_eq!((c.name.as_str(), c.payload_bytes), ("ble", 27));
        assert_eq!(c.spec_string(), "ble:27");
        assert!(PayloadProfile::parse("wifi").is_err());
        assert!(PayloadProfile::parse("x:0").is_err());
    }

    #[test]
    fn granularity() {
        let d5 = SegmentDictionary::uniform(0.0, 500.0, 5).unwrap();
        let lora = privacy_granularity(&d5, 5000.0);
        let xbee = privacy_granularity(&d5, 500.0);
        assert_eq!(lora.absolute, 1000.0);
        assert_eq!(xbee.absolute, 100.0);
        assert_eq!(lora.normalized, 0.2);
        assert_eq!(xbee.normalized, lora.normalized);
        let d1 = SegmentDictionary::uniform(0.0, 500.0, 1).unwrap();
        assert_eq!(privacy_granularity(&d1, 500.0).normalized, 1.0);
    }
}
