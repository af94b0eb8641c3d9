//! Experiment configuration: flat `key = value` text.
//!
//! ```text
//! # comment
//! m = 100
//! k = 8
//! r = sweep        # or an exponent >= 1, or `none` for the raw field
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::bloom::BloomParams;
use crate::protocol::{FieldEncoding, PayloadProfile};
use crate::rake::RakeParams;
use crate::sim::ExperimentParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(line), Some(field)) => {
                write!(f, "line {line}, field `{field}`: {}", self.message)
            }
            (Some(line), None) => write!(f, "line {line}: {}", self.message),
            (None, Some(field)) => write!(f, "field `{field}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: Some(field.to_string()),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakeChoice {
    /// Uncompressed field.
    None,
    Fixed(u8),
    Sweep,
}

impl fmt::Display for RakeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Fixed(r) => write!(f, "{r}"),
            Self::Sweep => f.write_str("sweep"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub r: RakeChoice,
    pub segments: u16,
    pub hops: usize,
    pub num_vehicles: usize,
    pub road_length_m: f64,
    pub payload_profile: PayloadProfile,
    pub trials: u64,
    pub master_seed: u64,
    pub output_path: PathBuf,
    /// Wall-clock codec timing; when off the CSV time column reads `NA`.
    pub timing: bool,
}

const KEYS: [&str; 13] = [
    "m",
    "k",
    "seed",
    "r",
    "S",
    "H",
    "num_vehicles",
    "road_length_m",
    "payload_profile",
    "trials",
    "master_seed",
    "output_path",
    "timing",
];

const REQUIRED: [&str; 7] = ["m", "k", "r", "S", "H", "num_vehicles", "trials"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                line: Some(line_no),
                field: None,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError {
                    line: Some(line_no),
                    field: Some(key.to_string()),
                    message: "unknown key".into(),
                });
            };
            if entries.insert(key, (line_no, value)).is_some() {
                return Err(ConfigError {
                    line: Some(line_no),
                    field: Some(key.to_string()),
                    message: "duplicate key".into(),
                });
            }
        }
        for key in REQUIRED {
            if !entries.contains_key(key) {
                return Err(ConfigError::field(key, "missing required key"));
            }
        }

        let get = |key: &str| entries.get(key).copied();
        let num = |key: &str, default: u64| -> Result<u64, ConfigError> {
            match get(key) {
                None => Ok(default),
                Some((line, v)) => v.parse::<u64>().map_err(|e| ConfigError {
                    line: Some(line),
                    field: Some(key.to_string()),
                    message: format!("{v:?} is not a non-negative integer ({e})"),
                }),
            }
        };
        let at = |key: &str, message: String| ConfigError {
            line: get(key).map(|(l, _)| l),
            field: Some(key.to_string()),
            message,
        };

        let r = match get("r") {
            Some((_, "sweep")) => RakeChoice::Sweep,
            Some((_, "none")) => RakeChoice::None,
            Some((line, v)) => RakeChoice::Fixed(v.parse::<u8>().map_err(|_| ConfigError {
                line: Some(line),
                field: Some("r".into()),
                message: format!("{v:?} is not `sweep`, `none` or a rake exponent"),
            })?),
            None => unreachable!("required"),
        };
        let segments = num("S", 0)?;
        let segments = u16::try_from(segments)
            .map_err(|_| at("S", format!("S={segments} exceeds {}", u16::MAX)))?;
        let road_length_m = match get("road_length_m") {
            None => 500.0,
            Some((_, v)) => v
                .parse::<f64>()
                .map_err(|e| at("road_length_m", format!("{v:?} is not a number ({e})")))?,
        };
        let payload_profile = match get("payload_profile") {
            None => PayloadProfile::zigbee(),
            Some((_, v)) => {
                PayloadProfile::parse(v).map_err(|e| at("payload_profile", e.to_string()))?
            }
        };
        let timing = match get("timing") {
            None | Some((_, "on" | "true")) => true,
            Some((_, "off" | "false")) => false,
            Some((_, v)) => return Err(at("timing", format!("{v:?} is not on/off"))),
        };

        let config = Self {
            m: num("m", 0)? as usize,
            k: num("k", 0)? as usize,
            seed: num("seed", 0)?,
            r,
            segments,
            hops: num("H", 0)? as usize,
            num_vehicles: num("num_vehicles", 0)? as usize,
            road_length_m,
            payload_profile,
            trials: num("trials", 0)?,
            master_seed: num("master_seed", 1)?,
            output_path: get("output_path")
                .map(|(_, v)| PathBuf::from(v))
                .unwrap_or_else(|| PathBuf::from("results.csv")),
            timing,
        };
        config.validate().map_err(|mut e| {
            if let Some(field) = &e.field {
                e.line = get(field).map(|(l, _)| l);
            }
            e
        })?;
        Ok(config)
    }

    /// Checks every protocol invariant the experiment relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m == 0 {
            return Err(ConfigError::field("m", "m must be >= 1"));
        }
        if self.m > u16::MAX as usize {
            return Err(ConfigError::field(
                "m",
                format!("m must be <= {}", u16::MAX),
            ));
        }
        if self.k == 0 {
            return Err(ConfigError::field("k", "k must be >= 1"));
        }
        if self.k > self.m {
            return Err(ConfigError::field(
                "k",
                format!("k must be <= m (k={}, m={})", self.k, self.m),
            ));
        }
        if self.k > u8::MAX as usize {
            return Err(ConfigError::field("k", format!("k must be <= {}", u8::MAX)));
        }
        if let RakeChoice::Fixed(r) = self.r {
            RakeParams::for_filter(r, self.m).map_err(|e| {
                ConfigError::field("r", format!("{e} (R = 2^r must satisfy 2 <= R <= m)"))
            })?;
        }
        if self.segments == 0 {
            return Err(ConfigError::field("S", "S must be >= 1"));
        }
        if self.hops == 0 {
            return Err(ConfigError::field("H", "H must be >= 1"));
        }
        if self.hops > self.num_vehicles {
            return Err(ConfigError::field(
                "H",
                format!(
                    "H must be <= num_vehicles (H={}, num_vehicles={})",
                    self.hops, self.num_vehicles
                ),
            ));
        }
        if !(self.road_length_m.is_finite() && self.road_length_m > 0.0) {
            return Err(ConfigError::field(
                "road_length_m",
                format!("road length must be > 0, got {}", self.road_length_m),
            ));
        }
        if self.trials == 0 {
            return Err(ConfigError::field("trials", "trials must be >= 1"));
        }
        Ok(())
    }

    /// Experiment parameters for a concrete encoding. A sweep must be
    /// resolved by the caller first.
    pub fn experiment(&self, encoding: FieldEncoding) -> Result<ExperimentParams, ConfigError> {
        let bloom = BloomParams::new(self.m, self.k, self.seed)
            .map_err(|e| ConfigError::field("k", e.to_string()))?;
        let params = ExperimentParams {
            bloom,
            encoding,
            num_segments: self.segments,
            num_vehicles: self.num_vehicles,
            hops: self.hops,
            road_length: self.road_length_m,
            profile: self.payload_profile.clone(),
        };
        params.validate().map_err(|e| ConfigError {
            line: None,
            field: None,
            message: e.to_string(),
        })?;
        Ok(params)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m = {}", self.m)?;
        writeln!(f, "k = {}", self.k)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "r = {}", self.r)?;
        writeln!(f, "S = {}", self.segments)?;
        writeln!(f, "H = {}", self.hops)?;
        writeln!(f, "num_vehicles = {}", self.num_vehicles)?;
        writeln!(f, "road_length_m = {}", self.road_length_m)?;
        writeln!(
            f,
            "payload_profile = {}",
            self.payload_profile.spec_string()
        )?;
        writeln!(f, "trials = {}", self.trials)?;
        writeln!(f, "master_seed = {}", self.master_seed)?;
        writeln!(f, "output_path = {}", self.output_path.display())?;
        writeln!(f, "timing = {}", if self.timing { "on" } else { "off" })
    }
}
