use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fastcp::fit::{Algorithm, InitMethod};

#[derive(Debug, Parser)]
#[command(name = "fastcp", version, about = "CP decomposition benchmarks and solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a collinear benchmark tensor with its true factors.
    Gen(GenArgs),
    /// Fit a CP model to a tensor file.
    Fit(FitArgs),
    /// Run a Monte-Carlo sweep and write per-run and summary CSV files.
    Bench(BenchArgs),
    /// Check the fast kernels against dense oracles.
    Verify(VerifyArgs),
    /// Closed-form eigenvalues and noise floor of collinear tensors.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub nu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a noisy copy at this SNR (dB).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long)]
    pub complex: bool,
    /// Output prefix; files are `<out>.cptn`, `<out>.noisy.cptn`, `<out>.truth<n>.cptn`, `<out>.meta`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "flm-a")]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tau: f64,
    #[arg(long, default_value = "svd")]
    pub init: InitMethod,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Tensor file (CPTN).
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Seed for the initialization; defaults to the seed in `--meta`, else 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sidecar written by `gen`; supplies nu, SNR and true factors for scoring.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Output prefix; writes `<out>.factor<n>.cptn` and `<out>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub rank: Vec<usize>,
    /// SNR values in dB; `inf` for noise-free.
    #[arg(long, value_delimiter = ',', default_value = "inf")]
    pub snr: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "als-ls,flm-a")]
    pub algos: Vec<fastcp::fit::Algorithm>,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tau: f64,
    #[arg(long, default_value = "svd")]
    pub init: InitMethod,
    #[arg(long)]
    pub complex: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary CSV; defaults to `<out stem>.summary.csv`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Perturb every fast-side result; the run must then fail.
    #[arg(long)]
    pub perturb: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "inf")]
    pub snr: Vec<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
