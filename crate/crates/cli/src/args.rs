use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use platoon_core::SimMode;

/// Robust headway and gain design, string-stability checks and platoon
/// simulation under noisy V2V links.
#[derive(Debug, Parser)]
#[command(name = "platoon", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissible k_a range, headway bound and the optimal (k_a, h_w) pair.
    Synth(SynthArgs),
    /// Feasible (k_p, k_v) region as a membership grid.
    Region(RegionArgs),
    /// Robust string-stability verdict and frequency response.
    Check(RunArgs),
    /// Single platoon simulation.
    Simulate(RunArgs),
    /// Monte-Carlo mean of stochastic runs against the averaged model.
    Montecarlo(RunArgs),
    /// Verdicts and simulated amplification over lists of k_a and h_w.
    Sweep(SweepArgs),
}

/// Channel and lag settings shared by every command.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// SNR factor ρ > 1 (`inf` for a noiseless link).
    #[arg(long, conflicts_with = "snr_db")]
    pub rho: Option<f64>,
    /// SNR in dB, ρ = 10^(dB/20).
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Lag bound τ0 in seconds; also caps the simulated lag.
    #[arg(long)]
    pub tau0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GainArgs {
    #[arg(long)]
    pub ka: Option<f64>,
    #[arg(long)]
    pub kv: Option<f64>,
    #[arg(long)]
    pub kp: Option<f64>,
    /// Time headway h_w in seconds.
    #[arg(long)]
    pub hw: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory for CSV (and SVG) files. Falls back to `run.out_dir`,
    /// then `$PLATOON_OUT_DIR`, then `platoon-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render SVG plots next to the CSV files.
    #[arg(long)]
    pub svg: bool,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub ka: Option<f64>,
    #[arg(long)]
    pub hw: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub gains: GainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// k_p window as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub kp_range: Option<Vec<f64>>,
    /// k_v window as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub kv_range: Option<Vec<f64>>,
    /// Grid points per axis, `N` or `NxM` (k_p × k_v).
    #[arg(long, default_value = "101")]
    pub grid: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub gains: GainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<SimMode>,
    /// Monte-Carlo run count.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Write the fully resolved configuration to this path.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Feedforward gains to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ka: Vec<f64>,
    /// Headways to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hw: Vec<f64>,
    /// Fixed k_p; with --kv, otherwise the region centroid per point.
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub kv: Option<f64>,
    /// Skip the averaged-mode simulation per point.
    #[arg(long)]
    pub no_sim: bool,
}
