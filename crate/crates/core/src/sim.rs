//! Static multi-hop chain simulator and Monte Carlo harness.
//!
//! Each trial draws fresh vehicle ids and positions, broadcasts the session,
//! forwards one packet along an H-hop path and lets the RSU decode it. Trials
//! are independent: trial `i` uses a ChaCha8 stream `i` keyed by the master
//! seed, so results do not depend on scheduling or worker count.

use std::collections::{BTreeSet, HashSet};
use std::io::{self, Write};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bloom::{false_positive_probability, BloomParams, ProvenanceKey};
use crate::protocol::{
    embed_traced, FieldEncoding, PayloadProfile, ProtocolError, ProvenancePacket, Rsu,
    SegmentDictionary, SessionConfig, VehicleNode,
};
use crate::rake::{self, RakeParams, SweepResult};

/// Rake exponents tried when the exponent is left to the sweep.
pub const SWEEP_CANDIDATES: [u8; 4] = [1, 2, 3, 4];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: ProtocolError,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub bloom: BloomParams,
    pub encoding: FieldEncoding,
    pub num_segments: u16,
    pub num_vehicles: usize,
    pub hops: usize,
    pub road_length: f64,
    pub profile: PayloadProfile,
}

impl ExperimentParams {
    /// The reference setup: 10 vehicles, 2 per segment over 5 segments of a
    /// 500 m road, a 5-hop path, k = 8 and a ZigBee frame.
    pub fn reference(m: usize, encoding: FieldEncoding) -> Result<Self, SimError> {
        let params = Self {
            bloom: BloomParams::new(m, 8, 0).map_err(|e| SimError::Invalid(e.to_string()))?,
            encoding,
            num_segments: 5,
            num_vehicles: 10,
            hops: 5,
            road_length: 500.0,
            profile: PayloadProfile::zigbee(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_segments == 0 {
            return Err(SimError::Invalid("S must be at least 1".into()));
        }
        if self.hops == 0 {
            return Err(SimError::Invalid("H must be at least 1".into()));
        }
        if self.hops > self.num_vehicles {
            return Err(SimError::Invalid(format!(
                "H must be <= num_vehicles (H={}, num_vehicles={})",
                self.hops, self.num_vehicles
            )));
        }
        if self.num_vehicles > u32::MAX as usize / 2 {
            return Err(SimError::Invalid("num_vehicles too large".into()));
        }
        self.session()?;
        Ok(())
    }

    pub fn dictionary(&self) -> Result<SegmentDictionary, ProtocolError> {
        SegmentDictionary::uniform(0.0, self.road_length, self.num_segments)
    }

    pub fn session(&self) -> Result<SessionConfig, ProtocolError> {
        SessionConfig::new(self.dictionary()?, self.bloom, self.encoding)
    }

    pub fn with_encoding(&self, encoding: FieldEncoding) -> Self {
        Self {
            encoding,
            ..self.clone()
        }
    }

    /// Candidate pairs the RSU tests: every registered vehicle in every segment.
    pub fn candidates(&self) -> usize {
        self.num_vehicles * self.num_segments as usize
    }
}

/// Vehicles on the road, the uplink path and the RSU's segmentation.
#[derive(Debug, Clone)]
pub struct Topology {
    pub nodes: Vec<VehicleNode>,
    pub path: Vec<u32>,
    pub dict: SegmentDictionary,
}

impl Topology {
    /// Vehicle `i` is placed uniformly inside segment `i mod S`. The path
    /// takes vehicles round-robin over a shuffled segment order, so a path
    /// with `H <= S` visits `H` distinct segments.
    pub fn random<R: Rng>(params: &ExperimentParams, rng: &mut R) -> Result<Self, SimError> {
        let dict = params.dictionary()?;
        let s = dict.num_segments();

        let mut seen = HashSet::with_capacity(params.num_vehicles);
        let mut nodes = Vec::with_capacity(params.num_vehicles);
        let mut by_segment: Vec<Vec<usize>> = vec![Vec::new(); s];
        for i in 0..params.num_vehicles {
            let id = loop {
                let id: u32 = rng.gen();
                if seen.insert(id) {
                    break id;
                }
            };
            let (start, end) = dict.interval(i % s);
            let position = rng.gen_range(start..end);
            by_segment[i % s].push(i);
            nodes.push(VehicleNode::new(id, position));
        }

        for members in &mut by_segment {
            members.shuffle(rng);
        }
        let mut order: Vec<usize> = (0..s).collect();
        order.shuffle(rng);

        let mut path = Vec::with_capacity(params.hops);
        let mut round = 0;
        while path.len() < params.hops {
            for &seg in &order {
                if let Some(&i) = by_segment[seg].get(round) {
                    path.push(nodes[i].vehicle_id);
                    if path.len() == params.hops {
                        break;
                    }
                }
            }
            round += 1;
        }

        let topology = Self { nodes, path, dict };
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.path.is_empty() {
            return Err(SimError::Invalid("path must have at least one hop".into()));
        }
        let registered: HashSet<u32> = self.nodes.iter().map(|n| n.vehicle_id).collect();
        if registered.len() != self.nodes.len() {
            return Err(SimError::Invalid("vehicle ids must be distinct".into()));
        }
        let mut on_path = HashSet::new();
        for id in &self.path {
            if !registered.contains(id) {
                return Err(SimError::Invalid(format!(
                    "path vehicle {id} is not registered"
                )));
            }
            if !on_path.insert(*id) {
                return Err(SimError::Invalid(format!(
                    "vehicle {id} appears twice on the path"
                )));
            }
        }
        Ok(())
    }

    pub fn registered(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.vehicle_id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialMetrics {
    pub lit_bits_per_hop: Vec<usize>,
    /// Encoded field size after each hop, excluding the length prefix.
    pub compressed_bits_per_hop: Vec<usize>,
    pub codec_time_per_hop: Vec<Duration>,
    /// All embedded pairs decoded and nothing else.
    pub decode_ok: bool,
    /// Candidate pairs that decoded without having been embedded.
    pub ambiguity_count: usize,
    /// Embedded pairs the RSU failed to decode. Always zero for a sound filter.
    pub false_negatives: usize,
    pub budget_exceeded: bool,
}

impl TrialMetrics {
    pub fn hops(&self) -> usize {
        self.lit_bits_per_hop.len()
    }
}

/// Runs the message flow on a fixed topology: broadcast, H embed steps, RSU decode.
pub fn run_on_topology(
    topology: &Topology,
    session: &SessionConfig,
    profile: &PayloadProfile,
    timed: bool,
) -> Result<TrialMetrics, ProtocolError> {
    let mut nodes = topology.nodes.clone();
    let rsu = Rsu::new(session.clone(), topology.registered());
    rsu.broadcast(&mut nodes)?;

    let hops = topology.path.len();
    let mut lit_bits_per_hop = Vec::with_capacity(hops);
    let mut compressed_bits_per_hop = Vec::with_capacity(hops);
    let mut codec_time_per_hop = Vec::with_capacity(hops);
    let mut embedded = BTreeSet::new();
    let mut budget_exceeded = false;

    let mut packet = ProvenancePacket::originate(Vec::new(), session)?;
    for id in &topology.path {
        let node = nodes
            .iter()
            .find(|n| n.vehicle_id == *id)
            .expect("topology validated");
        let node_session = node.session().ok_or(ProtocolError::NoSession(*id))?;
        embedded.insert(ProvenanceKey::new(*id, node.segment()?));
        let trace = embed_traced(&packet, node, node_session, profile, timed)?;
        lit_bits_per_hop.push(trace.lit_count);
        compressed_bits_per_hop.push(trace.field_bits);
        codec_time_per_hop.push(trace.codec_time);
        budget_exceeded |= !trace.within_budget;
        packet = trace.packet;
    }

    let wire = packet.to_bytes();
    let report = rsu.receive(&ProvenancePacket::parse(&wire)?)?;
    let false_negatives = embedded.iter().filter(|k| !report.contains(k)).count();
    let ambiguity_count = report.match_count() - (embedded.len() - false_negatives);

    Ok(TrialMetrics {
        lit_bits_per_hop,
        compressed_bits_per_hop,
        codec_time_per_hop,
        decode_ok: false_negatives == 0 && ambiguity_count == 0 && !budget_exceeded,
        ambiguity_count,
        false_negatives,
        budget_exceeded,
    })
}

/// RNG for one trial: stream `trial_index` of the master seed.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

pub fn run_trial(
    params: &ExperimentParams,
    master_seed: u64,
    trial_index: u64,
    timed: bool,
) -> Result<TrialMetrics, SimError> {
    let mut rng = trial_rng(master_seed, trial_index);
    let topology = Topology::random(params, &mut rng)?;
    let session = params.session()?;
    run_on_topology(&topology, &session, &params.profile, timed).map_err(|source| SimError::Trial {
        trial: trial_index,
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub trials: u64,
    pub master_seed: u64,
    /// Worker cap; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub timed: bool,
}

impl RunOptions {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            jobs: None,
            timed: true,
        }
    }
}

/// Runs all trials; the result is in trial order regardless of scheduling.
pub fn run_trials(
    params: &ExperimentParams,
    opts: &RunOptions,
) -> Result<Vec<TrialMetrics>, SimError> {
    params.validate()?;
    if opts.trials == 0 {
        return Err(SimError::Invalid("trials must be at least 1".into()));
    }
    let work = || {
        (0..opts.trials)
            .into_par_iter()
            .map(|i| run_trial(params, opts.master_seed, i, opts.timed))
            .collect::<Result<Vec<_>, _>>()
    };
    match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()?
            .install(work),
        None => work(),
    }
}

/// Σ lit / (trials · H · m).
pub fn avg_sparsity(metrics: &[TrialMetrics], m: usize) -> f64 {
    let hop_entries: usize = metrics.iter().map(TrialMetrics::hops).sum();
    let lit: usize = metrics.iter().flat_map(|t| &t.lit_bits_per_hop).sum();
    lit as f64 / (hop_entries * m) as f64
}

/// Standard error of [`avg_sparsity`], treating each trial's mean as one sample.
pub fn sparsity_standard_error(metrics: &[TrialMetrics], m: usize) -> f64 {
    let samples: Vec<f64> = metrics
        .iter()
        .map(|t| t.lit_bits_per_hop.iter().sum::<usize>() as f64 / (t.hops() * m) as f64)
        .collect();
    standard_error(&samples)
}

/// Σ compressed bits / (trials · H).
pub fn avg_compressed_size(metrics: &[TrialMetrics]) -> f64 {
    let hop_entries: usize = metrics.iter().map(TrialMetrics::hops).sum();
    let bits: usize = metrics
        .iter()
        .flat_map(|t| &t.compressed_bits_per_hop)
        .sum();
    bits as f64 / hop_entries as f64
}

pub fn compressed_size_standard_error(metrics: &[TrialMetrics]) -> f64 {
    let samples: Vec<f64> = metrics
        .iter()
        .map(|t| t.compressed_bits_per_hop.iter().sum::<usize>() as f64 / t.hops() as f64)
        .collect();
    standard_error(&samples)
}

fn standard_error(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Mean per-hop codec time over all hops.
pub fn mean_codec_time(metrics: &[TrialMetrics]) -> Duration {
    let hop_entries: usize = metrics.iter().map(TrialMetrics::hops).sum();
    let total: Duration = metrics.iter().flat_map(|t| &t.codec_time_per_hop).sum();
    if hop_entries == 0 {
        Duration::ZERO
    } else {
        total / hop_entries as u32
    }
}

/// Filter density expected after the j-th insertion, for j = 1..=hops.
pub fn hop_densities(m: usize, k: usize, hops: usize) -> Vec<f64> {
    let miss = 1.0 - 1.0 / m as f64;
    (1..=hops)
        .map(|j| 1.0 - miss.powf((j * k) as f64))
        .collect()
}

/// `(1/H) Σ_{j=1..H} (1 - (1 - 1/m)^(j k))`.
pub fn expected_sparsity(m: usize, k: usize, hops: usize) -> f64 {
    hop_densities(m, k, hops).iter().sum::<f64>() / hops as f64
}

/// Closed-form chance that at least one non-embedded candidate decodes:
/// `1 - (1 - FPP(n = H))^(candidates - H)`.
pub fn expected_decode_failure_rate(params: &ExperimentParams) -> f64 {
    let fpp = false_positive_probability(&params.bloom, params.hops);
    let non_keys = params.candidates().saturating_sub(params.hops);
    1.0 - (1.0 - fpp).powi(non_keys as i32)
}

/// Sweeps the rake exponent over [`SWEEP_CANDIDATES`] (those with `R <= m`)
/// using the analytic per-hop densities of the experiment.
pub fn select_rake(m: usize, k: usize, hops: usize) -> SweepResult {
    let candidates: Vec<u8> = SWEEP_CANDIDATES
        .iter()
        .copied()
        .filter(|&r| RakeParams::for_filter(r, m).is_ok())
        .collect();
    let candidates = if candidates.is_empty() {
        vec![1]
    } else {
        candidates
    };
    rake::sweep_rake_param_with(
        &hop_densities(m, k, hops),
        m,
        &candidates,
        2000,
        0x5357_4545_5052_4f46,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub m: usize,
    pub k: usize,
    pub hops: usize,
    /// Rake exponent, 0 for the uncompressed field.
    pub r: u8,
    pub trials: u64,
    pub avg_sparsity: f64,
    pub avg_compressed_bits: f64,
    pub decode_failure_rate: f64,
    pub mean_ambiguity_count: f64,
    pub false_negatives: usize,
    pub budget_failures: u64,
    /// `None` when the run was untimed.
    pub mean_codec_time: Option<Duration>,
}

impl ExperimentSummary {
    pub fn from_metrics(params: &ExperimentParams, metrics: &[TrialMetrics], timed: bool) -> Self {
        let trials = metrics.len() as u64;
        let failures = metrics.iter().filter(|t| !t.decode_ok).count();
        let ambiguity: usize = metrics.iter().map(|t| t.ambiguity_count).sum();
        Self {
            m: params.bloom.m(),
            k: params.bloom.k(),
            hops: params.hops,
            r: params.encoding.record_exponent(),
            trials,
            avg_sparsity: avg_sparsity(metrics, params.bloom.m()),
            avg_compressed_bits: avg_compressed_size(metrics),
            decode_failure_rate: failures as f64 / trials as f64,
            mean_ambiguity_count: ambiguity as f64 / trials as f64,
            false_negatives: metrics.iter().map(|t| t.false_negatives).sum(),
            budget_failures: metrics.iter().filter(|t| t.budget_exceeded).count() as u64,
            mean_codec_time: timed.then(|| mean_codec_time(metrics)),
        }
    }
}

pub const CSV_HEADER: &str =
    "m,k,H,r,trials,avg_sparsity_pct,avg_compressed_bits,decode_failure_rate,mean_codec_time_us";

pub fn write_csv<W: Write>(mut out: W, rows: &[ExperimentSummary]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in rows {
        let time = match s.mean_codec_time {
            Some(t) => format!("{:.4}", t.as_secs_f64() * 1e6),
            None => "NA".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{:.4},{:.4},{:.6},{}",
            s.m,
            s.k,
            s.hops,
            s.r,
            s.trials,
            100.0 * s.avg_sparsity,
            s.avg_compressed_bits,
            s.decode_failure_rate,
            time
        )?;
    }
    Ok(())
}

/// Paired with/without-codec comparison over identical topologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayComparison {
    pub with_codec_time: Duration,
    pub without_codec_time: Duration,
    pub with_codec_bits: f64,
    pub without_codec_bits: f64,
}

impl DelayComparison {
    pub fn codec_is_slower(&self) -> bool {
        self.with_codec_time > self.without_codec_time
    }

    pub fn codec_is_smaller(&self) -> bool {
        self.with_codec_bits < self.without_codec_bits
    }

    /// Extra processing time per hop caused by the codec.
    pub fn overhead(&self) -> Duration {
        self.with_codec_time.saturating_sub(self.without_codec_time)
    }
}

pub fn delay_overhead(
    with_codec: &[TrialMetrics],
    without_codec: &[TrialMetrics],
) -> DelayComparison {
    DelayComparison {
        with_codec_time: mean_codec_time(with_codec),
        without_codec_time: mean_codec_time(without_codec),
        with_codec_bits: avg_compressed_size(with_codec),
        without_codec_bits: avg_compressed_size(without_codec),
    }
}
