//! Run configurations, parsed from flags and stored beside every output.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "cmlt", version, about = "Metropolis light transport with sampling charts", args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<RunConfig>,
    /// Re-run a configuration saved in an output manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything a subcommand needs; serialized into each run manifest.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    /// Run a flatland variant, or its path-traced reference.
    Flatland(FlatlandArgs),
    /// Render a 3D scene with CMLT, MMLT, PSSMLT or BDPT.
    Render(RenderArgs),
    /// RMSE between two PFM images.
    Rmse(RmseArgs),
    /// Convergence CSV from a run manifest.
    Report(ReportArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FlatlandArgs {
    /// A variant name, or `reference`.
    #[arg(long, default_value = "cmlt")]
    pub variant: String,
    /// Target evaluations over all chains.
    #[arg(long, default_value_t = 4_000_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Samples per pixel of the reference.
    #[arg(long, default_value_t = 1024)]
    pub spp: usize,
    #[arg(long, default_value_t = 4)]
    pub swap_period: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub b_samples: usize,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.3)]
    pub large_step: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    /// cmlt, mmlt, pssmlt or bdpt.
    #[arg(long, default_value = "cmlt")]
    pub algo: String,
    /// TOML scene file; the built-in desk scene when absent.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Perturbation steps over all chains.
    #[arg(long, default_value_t = 1 << 21)]
    pub mutations: u64,
    #[arg(long, default_value_t = 512)]
    pub chains: usize,
    #[arg(long, default_value_t = 16)]
    pub swap_period: u64,
    /// Subpath pairs for brightness estimation and seeding.
    #[arg(long, default_value_t = 1 << 20)]
    pub n_init: usize,
    /// Samples per pixel for `bdpt`.
    #[arg(long, default_value_t = 64)]
    pub spp: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.3)]
    pub large_step: f64,
    /// Checkpoints at doubling mutation counts.
    #[arg(long, default_value_t = 1)]
    pub checkpoints: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// PFM output; the manifest goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
    /// PFM image to compute RMSE against at each checkpoint.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Convergence CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Tone-mapped PNG preview.
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// PNG exposure in stops.
    #[arg(long, default_value_t = 0.0)]
    pub exposure: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RmseArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// CSV with both paths and the value.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Manifest written by `flatland` or `render`.
    pub run: PathBuf,
    /// Recompute RMSE of the saved checkpoint images against this image.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
