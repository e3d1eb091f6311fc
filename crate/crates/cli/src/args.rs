//! Flag parsing. All numeric flags accept plain integers or scientific
//! notation (`1e9`, `2.5e6`).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use twinsep::predictor::{DEFAULT_M0, TWIN_CONSTANT_C2};
use twinsep::sieve::{DEFAULT_SEGMENT_SIZE, MAX_LIMIT};
use twinsep::stats::DEFAULT_MIN_COUNT;

/// Twin-prime census, separation statistics, and gap-onset prediction.
#[derive(Debug, Parser)]
#[command(name = "twinsep", version, about)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sieve primes, enumerate twins, and write per-checkpoint
    /// histograms, record gaps, and a summary.
    Census(CensusArgs),
    /// Fit the separation-decay parameter at each census checkpoint and
    /// regress the scale-free constant across them.
    Fit(FitArgs),
    /// Evaluate the gap-onset curve over a grid, or invert it for the
    /// bound at which a separation is first expected.
    Predict(PredictArgs),
    /// Check each censused record gap against the predicted risk band.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    /// Census bound (inclusive), at least 100.
    #[arg(long, value_parser = parse_count)]
    pub limit: u64,

    /// Extra checkpoint bounds added to the default decade grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub checkpoints: Vec<u64>,

    /// Sieve segment size in numbers.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_SIZE, value_parser = parse_count)]
    pub segment_size: u64,

    /// Artifact directory.
    #[arg(long, default_value = "twinsep-out")]
    pub out: PathBuf,

    /// Continue from the state file of an interrupted run.
    #[arg(long)]
    pub resume: bool,

    /// Also export every separation as a CSV row.
    #[arg(long)]
    pub export_separations: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Census artifact directory.
    #[arg(long, default_value = "twinsep-out")]
    pub out: PathBuf,

    /// Smallest bin count admitted to a fit.
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT, value_parser = parse_count)]
    pub min_count: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Decay constant.
    #[arg(long, default_value_t = DEFAULT_M0)]
    pub m0: f64,

    /// Twin constant.
    #[arg(long, default_value_t = TWIN_CONSTANT_C2)]
    pub c2: f64,

    /// Risk factors, one curve each.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    pub f: Vec<f64>,

    /// Bounds to evaluate (default: decades from 1e4 to 1e11).
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<f64>,

    /// Also emit curves at the low/high ends of the decay-constant band.
    #[arg(long)]
    pub m0_band: bool,

    /// Invert the curve: print the bound where it reaches --s-l.
    #[arg(long, requires = "s_l")]
    pub invert: bool,

    /// Threshold separation for --invert.
    #[arg(long = "s-l")]
    pub s_l: Option<f64>,

    /// Output directory for prediction tables.
    #[arg(long, default_value = "twinsep-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Census artifact directory (must hold record_gaps.csv).
    #[arg(long, default_value = "twinsep-out")]
    pub out: PathBuf,

    /// Decay constant.
    #[arg(long, default_value_t = DEFAULT_M0)]
    pub m0: f64,

    /// Twin constant.
    #[arg(long, default_value_t = TWIN_CONSTANT_C2)]
    pub c2: f64,

    /// Risk factors; the band checked is [min, max] of this list.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    pub f: Vec<f64>,
}

/// Parse a count given as an integer or in scientific notation.
pub fn parse_count(raw: &str) -> Result<u64, String> {
    if let Ok(v) = raw.parse::<u64>() {
        if v > MAX_LIMIT {
            return Err(format!("{v} exceeds the maximum bound {MAX_LIMIT}"));
        }
        return Ok(v);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("{raw:?} is not a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{raw:?} is not a non-negative count"));
    }
    if v.fract() != 0.0 {
        return Err(format!("{raw:?} is not a whole number"));
    }
    if v > MAX_LIMIT as f64 {
        return Err(format!("{raw:?} exceeds the maximum bound {MAX_LIMIT}"));
    }
    Ok(v as u64)
}

/// Default decade grid for prediction tables.
pub fn default_n_grid() -> Vec<f64> {
    (4..=11).map(|e| 10f64.powi(e)).collect()
}
