use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use momentforge::experiment::Generator;

#[derive(Debug, Parser)]
#[command(name = "momentforge", version, about = "Distribution recovery from noisy Chebyshev moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a distribution to a moment file.
    Recover(RecoverArgs),
    /// Release a differentially private synthetic distribution.
    DpSynth(DpSynthArgs),
    /// Estimate the spectral density of a symmetric matrix.
    Sde(SdeArgs),
    /// Population maximum-likelihood estimate from coin-flip counts.
    Popmle(PopmleArgs),
    /// Sweep n over powers of two and record private-synthesis error.
    ExperimentDp(ExperimentDpArgs),
    /// Run numerical self-checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// CSV with header `j,m` holding plain moments `m_1..m_k`.
    #[arg(long)]
    pub moments: PathBuf,
    /// Number of moments to use; defaults to all in the file.
    #[arg(long)]
    pub k: Option<usize>,
    /// Chebyshev grid size; defaults to `ceil(k^1.5)`.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DpSynthArgs {
    /// Numeric CSV, one row per record with `dim` columns.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, env = "MOMENTFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Public lower end of the data range, mapped to -1.
    #[arg(long, requires = "hi", allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// Public upper end of the data range, mapped to 1.
    #[arg(long, requires = "lo", allow_negative_numbers = true)]
    pub hi: Option<f64>,
    /// Also report W1 between the release and the input (one dimension only).
    #[arg(long)]
    pub evaluate: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SdeArgs {
    /// Matrix Market coordinate file, or a dense CSV when the name ends in `.csv`.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, env = "MOMENTFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Estimate from random probes even when reading the whole matrix is cheaper.
    #[arg(long)]
    pub force_probes: bool,
    #[arg(long)]
    pub probe_constant: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PopmleArgs {
    /// CSV with one head count per row.
    #[arg(long)]
    pub obs: PathBuf,
    /// Tosses per coin.
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = momentforge::popmle::DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Ground-truth distribution on [0, 1] to score against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GeneratorArg {
    Gaussian,
    Sine,
    Powerlaw,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Gaussian => Generator::Gaussian,
            GeneratorArg::Sine => Generator::Sine,
            GeneratorArg::Powerlaw => Generator::PowerLaw,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentDpArgs {
    #[arg(long, value_enum)]
    pub dist: GeneratorArg,
    #[arg(long, default_value_t = 128)]
    pub nmin: usize,
    #[arg(long, default_value_t = 8192)]
    pub nmax: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Fixed delta; defaults to `1/n^2` for each n.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, env = "MOMENTFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results are ordered by (n, trial) either way.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Decay,
    Jackson,
    Orthogonality,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
}
