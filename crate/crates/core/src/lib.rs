//! Segment-level spatial provenance for multi-hop vehicular networks.
//!
//! Vehicles forwarding a packet toward a road side unit (RSU) each insert
//! their identity and coarse road segment into a shared Bloom filter carried
//! in the payload. The filter is RAKE-compressed between hops, and the RSU
//! recovers every forwarder's segment by querying the filter.
//!
//! - [`bloom`]: the provenance filter and its false-positive analytics.
//! - [`rake`]: the sparse-bitstring codec.
//! - [`protocol`]: segmentation, broadcast record, packet format, per-hop
//!   embedding, RSU decoding and payload accounting.
//! - [`sim`]: the Monte Carlo harness.

pub mod bits;
pub mod bloom;
pub mod cli;
pub mod config;
pub mod protocol;
pub mod rake;
pub mod reference;
pub mod sim;

pub use bits::BitString;
pub use bloom::{BloomFilter, BloomParams, ProvenanceKey};
pub use rake::{CompressedBits, RakeParams};
