//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bits::BitString;
use crate::config::{ConfigError, ExperimentConfig, RakeChoice};
use crate::protocol::{payload_fraction, FieldEncoding, PayloadProfile};
use crate::rake::{self, RakeParams};
use crate::reference::{self, DEFAULT_MASTER_SEED, DEFAULT_TRIALS};
use crate::sim::{self, ExperimentSummary, RunOptions};

/// Environment variable that overrides `master_seed`.
pub const SEED_ENV: &str = "PROVSEG_SEED";

const BUNDLED: [(&str, &str); 3] = [
    ("table1_m100", include_str!("../configs/table1_m100.conf")),
    ("table1_m125", include_str!("../configs/table1_m125.conf")),
    ("table1_m150", include_str!("../configs/table1_m150.conf")),
];

#[derive(Debug, Parser)]
#[command(
    name = "provseg",
    version,
    about = "Segment-level spatial provenance experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment from a config file or bundled config name.
    Run {
        config: String,
        /// Maximum worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Reproduce the three reference operating points (m = 100, 125, 150).
    Table1 {
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<std::path::PathBuf>,
    },
    /// Apply the RAKE codec to a hex-encoded bit string.
    Codec {
        direction: Direction,
        /// Uncompressed length in bits.
        #[arg(long)]
        m: usize,
        /// Rake exponent; the rake width is 2^r.
        #[arg(long)]
        r: u8,
        /// Exact compressed length in bits (decompress only).
        #[arg(long)]
        bits: Option<usize>,
        hex: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Compress,
    Decompress,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Input(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn execute<W: Write>(cli: Cli, env_seed: Option<&str>, out: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, jobs } => {
            let config = load_config(&config, env_seed)?;
            cmd_run(&config, jobs, out).map(|_| ())
        }
        Command::Table1 { trials, jobs, csv } => {
            let master_seed = parse_env_seed(env_seed)?.unwrap_or(DEFAULT_MASTER_SEED);
            cmd_table1(trials, master_seed, jobs, csv.as_deref(), out)
        }
        Command::Codec {
            direction,
            m,
            r,
            bits,
            hex,
        } => cmd_codec(direction, &hex, m, r, bits, out),
    }
}

fn parse_env_seed(env_seed: Option<&str>) -> Result<Option<u64>, CliError> {
    env_seed
        .map(|s| {
            s.trim().parse::<u64>().map_err(|e| {
                CliError::Config(ConfigError {
                    line: None,
                    field: Some(SEED_ENV.into()),
                    message: format!("{s:?} is not a u64 ({e})"),
                })
            })
        })
        .transpose()
}

/// Reads a config from a path, falling back to the bundled configs by name.
pub fn load_config(name: &str, env_seed: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let text = if Path::new(name).exists() {
        fs::read_to_string(name).map_err(|e| CliError::Input(format!("{name}: {e}")))?
    } else if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name) {
        text.to_string()
    } else {
        return Err(CliError::Input(format!(
            "{name}: no such file or bundled config (bundled: {})",
            BUNDLED.map(|(n, _)| n).join(", ")
        )));
    };
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = parse_env_seed(env_seed)? {
        config.master_seed = seed;
    }
    Ok(config)
}

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn cmd_run<W: Write>(
    config: &ExperimentConfig,
    jobs: Option<usize>,
    out: &mut W,
) -> Result<ExperimentSummary, CliError> {
    let encoding = match config.r {
        RakeChoice::None => FieldEncoding::Raw,
        RakeChoice::Fixed(r) => FieldEncoding::Rake(RakeParams::new(r).map_err(runtime)?),
        RakeChoice::Sweep => {
            let sweep = sim::select_rake(config.m, config.k, config.hops);
            let costs: Vec<String> = sweep
                .costs
                .iter()
                .map(|(r, c)| format!("r={r}: {c:.2}"))
                .collect();
            writeln!(
                out,
                "rake sweep: {} -> r = {}",
                costs.join(", "),
                sweep.best
            )
            .map_err(runtime)?;
            FieldEncoding::Rake(RakeParams::new(sweep.best).map_err(runtime)?)
        }
    };
    let params = config.experiment(encoding)?;
    let opts = RunOptions {
        trials: config.trials,
        master_seed: config.master_seed,
        jobs,
        timed: config.timing,
    };
    let metrics = sim::run_trials(&params, &opts).map_err(runtime)?;
    let summary = ExperimentSummary::from_metrics(&params, &metrics, config.timing);

    write_summary(out, &summary, &config.payload_profile)?;

    let mut csv = Vec::new();
    sim::write_csv(&mut csv, std::slice::from_ref(&summary)).map_err(runtime)?;
    fs::write(&config.output_path, csv)
        .map_err(|e| runtime(format!("{}: {e}", config.output_path.display())))?;
    writeln!(out, "wrote {}", config.output_path.display()).map_err(runtime)?;
    Ok(summary)
}

fn write_summary<W: Write>(
    out: &mut W,
    s: &ExperimentSummary,
    profile: &PayloadProfile,
) -> Result<(), CliError> {
    let rake = if s.r == 0 {
        "none".to_string()
    } else {
        format!("{} (R = {})", s.r, 1u32 << s.r)
    };
    let field_bits = s.avg_compressed_bits.ceil() as usize;
    let occupancy = payload_fraction(field_bits, profile)
        .map(|p| format!("{p:.1}%"))
        .unwrap_or_else(|e| e.to_string());
    let time = s
        .mean_codec_time
        .map(|t| format!("{:.2} us", t.as_secs_f64() * 1e6))
        .unwrap_or_else(|| "not measured".into());
    writeln!(
        out,
        "m = {}, k = {}, H = {}, rake r = {rake}, trials = {}\n\
         avg sparsity           {:.2} %\n\
         avg provenance size    {:.2} bits\n\
         payload occupancy      {occupancy} of {} ({} bytes)\n\
         decode failure rate    {:.4}\n\
         false negatives        {}\n\
         budget failures        {}\n\
         mean codec time / hop  {time}",
        s.m,
        s.k,
        s.hops,
        s.trials,
        100.0 * s.avg_sparsity,
        s.avg_compressed_bits,
        profile.name,
        profile.payload_bytes,
        s.decode_failure_rate,
        s.false_negatives,
        s.budget_failures,
    )
    .map_err(runtime)
}

pub fn cmd_table1<W: Write>(
    trials: u64,
    master_seed: u64,
    jobs: Option<usize>,
    csv: Option<&Path>,
    out: &mut W,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let opts = RunOptions {
        trials,
        master_seed,
        jobs,
        timed: true,
    };
    let rows = reference::run_table1(&opts).map_err(runtime)?;
    write!(out, "{}", reference::format_table1(&rows)).map_err(runtime)?;

    if let Some(first) = rows.first() {
        let compressed = first.summary.avg_compressed_bits.round() as usize;
        let raw = first.summary.m;
        let line = |bits: usize| -> Result<String, CliError> {
            Ok(format!(
                "{bits} bits -> {:.1}% of zigbee ({} B), {:.1}% of lora ({} B)",
                payload_fraction(bits, &PayloadProfile::zigbee()).map_err(runtime)?,
                PayloadProfile::ZIGBEE_BYTES,
                payload_fraction(bits, &PayloadProfile::lora_dr7()).map_err(runtime)?,
                PayloadProfile::LORA_DR7_BYTES,
            ))
        };
        writeln!(out, "payload (m = {raw}): compressed {}", line(compressed)?).map_err(runtime)?;
        writeln!(out, "payload (m = {raw}): uncompressed {}", line(raw)?).map_err(runtime)?;
    }

    if let Some(path) = csv {
        let summaries: Vec<_> = rows.iter().map(|r| r.summary.clone()).collect();
        let mut buf = Vec::new();
        sim::write_csv(&mut buf, &summaries).map_err(runtime)?;
        fs::write(path, buf).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_hex(hex_input: &str) -> Result<Vec<u8>, CliError> {
    let cleaned = hex_input.trim();
    let cleaned = cleaned
        .strip_prefix("0x")
        .or_else(|| cleaned.strip_prefix("0X"))
        .unwrap_or(cleaned);
    hex::decode(cleaned).map_err(|e| CliError::Input(format!("malformed hex {hex_input:?}: {e}")))
}

pub fn cmd_codec<W: Write>(
    direction: Direction,
    hex_input: &str,
    m: usize,
    r: u8,
    bits: Option<usize>,
    out: &mut W,
) -> Result<(), CliError> {
    let params = RakeParams::new(r).map_err(|e| CliError::Input(e.to_string()))?;
    let bytes = parse_hex(hex_input)?;
    let result = match direction {
        Direction::Compress => {
            let input = BitString::from_bytes(&bytes, m)
                .map_err(|e| CliError::Input(format!("input is not {m} bits: {e}")))?;
            rake::compress(&input, params).payload
        }
        Direction::Decompress => {
            let decoded = match bits {
                Some(len) => {
                    let payload = BitString::from_bytes(&bytes, len)
                        .map_err(|e| CliError::Input(format!("stream is not {len} bits: {e}")))?;
                    rake::decompress(
                        &rake::CompressedBits {
                            payload,
                            original_len: m,
                        },
                        params,
                    )
                }
                None => rake::decompress_packed(&bytes, m, params),
            };
            decoded.map_err(|e| CliError::Input(e.to_string()))?
        }
    };
    writeln!(
        out,
        "hex={} bits={} binary={}",
        hex::encode(result.to_bytes()),
        result.len(),
        result
    )
    .map_err(runtime)
}
