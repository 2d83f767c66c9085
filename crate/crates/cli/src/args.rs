use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frvf::engine::Weighting;
use frvf::pipeline::Stacking;

#[derive(Debug, Parser)]
#[command(name = "frvf", version, about = "Frequency-domain modal identification by relaxed vector fitting")]
pub struct Cli {
    /// Directory receiving all output files and the manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Suppress progress messages (warnings and errors still print).
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the cantilever beam and write FRFs, time histories and the
    /// eigen reference.
    SimulateBeam(SimulateArgs),
    /// Fit one model order and extract modes.
    Identify(IdentifyArgs),
    /// Fit a range of orders and select stable modes.
    Stabilize(StabilizeArgs),
    /// Identification error versus noise level on the simulated beam.
    NoiseSweep(SweepArgs),
    /// Pair two modal sets by frequency and tabulate the differences.
    Compare(CompareArgs),
    /// Average normalised PSD of a th-csv or frf-csv file.
    Anpsd(AnpsdArgs),
    /// Write the stacked rows of an FRF file (for inspection).
    Stack(StackArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Flat key=value beam configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the element count.
    #[arg(long)]
    pub n_elem: Option<usize>,
    /// AWGN level on inputs and outputs, percent of each channel's std.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StackingArg {
    Superposed,
    Triangular,
    Flat,
}

impl From<StackingArg> for Stacking {
    fn from(s: StackingArg) -> Self {
        match s {
            StackingArg::Superposed => Stacking::Superposed,
            StackingArg::Triangular => Stacking::Triangular,
            StackingArg::Flat => Stacking::Flat,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    None,
    InverseSqrtMagnitude,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::None => Weighting::None,
            WeightingArg::InverseSqrtMagnitude => Weighting::InverseSqrtMagnitude,
        }
    }
}

/// Fit options shared by identify and stabilize.
#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub fmin: Option<f64>,
    #[arg(long)]
    pub fmax: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value = "superposed")]
    pub stacking: StackingArg,
    #[arg(long, value_enum, default_value = "inverse-sqrt-magnitude")]
    pub weighting: WeightingArg,
    /// Fix the sigma constant to 1 instead of the relaxed constraint.
    #[arg(long)]
    pub no_relax: bool,
    /// Drop the constant term d.
    #[arg(long)]
    pub no_d: bool,
    /// Add the proportional term s·e.
    #[arg(long)]
    pub include_e: bool,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// frf-csv v1 input.
    pub frf: PathBuf,
    #[arg(long, default_value_t = 24)]
    pub order: usize,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct StabilizeArgs {
    pub frf: PathBuf,
    /// Orders as lo:hi:step, hi included when reachable.
    #[arg(long)]
    pub orders: String,
    /// Distinct orders a mode must be stable at to be selected.
    #[arg(long, default_value_t = 3)]
    pub min_occurrences: usize,
    #[arg(long, default_value_t = 1.0)]
    pub df_hz: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dzeta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub mac_min: f64,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated noise levels in percent.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 3.0, 5.0])]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 36)]
    pub order: usize,
    #[arg(long, default_value_t = 2.0)]
    pub fmin: f64,
    #[arg(long, default_value_t = 480.0)]
    pub fmax: f64,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2.0)]
    pub f_tol_pct: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub modes_a: PathBuf,
    pub modes_b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub f_tol_pct: f64,
}

#[derive(Debug, Args)]
pub struct AnpsdArgs {
    /// th-csv v1 or frf-csv v1 input.
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    pub frf: PathBuf,
    #[arg(long, value_enum, default_value = "superposed")]
    pub stacking: StackingArg,
}

/// Parses `lo:hi:step`; hi is included when `(hi − lo)` is a multiple of step.
pub fn parse_orders(spec: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("orders must be lo:hi:step, got '{spec}'"));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid order bound '{s}' in '{spec}'"))
    };
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if lo == 0 || step == 0 || hi < lo {
        return Err(format!("orders need 1 <= lo <= hi and step >= 1, got '{spec}'"));
    }
    Ok((lo..=hi).step_by(step).collect())
}
