use std::collections::{BTreeMap, BTreeSet};

use crate::bloom::{BloomFilter, ProvenanceKey};
use crate::protocol::SegmentDictionary;

/// What the RSU learns from one packet: for each registered vehicle, the set
/// of segments whose key is present in the filter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeReport {
    pub located: BTreeMap<u32, BTreeSet<u16>>,
}

impl DecodeReport {
    pub fn segments_of(&self, vehicle_id: u32) -> Option<&BTreeSet<u16>> {
        self.located.get(&vehicle_id)
    }

    /// Vehicles with at least one matching segment.
    pub fn on_path(&self) -> impl Iterator<Item = (u32, &BTreeSet<u16>)> {
        self.located
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(v, s)| (*v, s))
    }

    pub fn not_on_path(&self) -> Vec<u32> {
        self.located
            .iter()
            .filter(|(_, s)| s.is_empty())
            .map(|(v, _)| *v)
            .collect()
    }

    /// Vehicles matching more than one segment. These are never resolved.
    pub fn ambiguous(&self) -> Vec<u32> {
        self.located
            .iter()
            .filter(|(_, s)| s.len() > 1)
            .map(|(v, _)| *v)
            .collect()
    }

    pub fn contains(&self, key: &ProvenanceKey) -> bool {
        self.located
            .get(&key.vehicle_id)
            .is_some_and(|s| s.contains(&key.segment_id))
    }

    /// Number of (vehicle, segment) matches.
    pub fn match_count(&self) -> usize {
        self.located.values().map(BTreeSet::len).sum()
    }
}

/// Queries every `registered x segment` candidate against the filter.
pub fn decode_provenance(
    filter: &BloomFilter,
    registered: &[u32],
    dict: &SegmentDictionary,
) -> DecodeReport {
    let located = registered
        .iter()
        .map(|&vehicle_id| {
            let segments = dict
                .segment_ids()
                .iter()
                .copied()
                .filter(|&seg| filter.query(&ProvenanceKey::new(vehicle_id, seg)))
                .collect();
            (vehicle_id, segments)
        })
        .collect();
    DecodeReport { located }
}
