use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mrf_phase::oracle::Boundary;

#[derive(Debug, Parser)]
#[command(
    name = "mrf-phase",
    version,
    about = "Uniqueness phase diagrams for second-order fields on regular trees"
)]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, env = "MRF_PHASE_JOBS", global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one model and report bounds, fixed points and limit laws.
    Analyze(AnalyzeArgs),
    /// Classify a grid of activities, or tabulate the depth sequences.
    Sweep(SweepArgs),
    /// Bracket the uniqueness threshold of a log-convex model.
    Phase(PhaseArgs),
    /// First-order analysis around the all-ones potential at the hardcore threshold.
    Perturb(PerturbArgs),
    /// Exact tree recursion and brute-force enumeration.
    Oracle(OracleArgs),
    /// Heat-bath sampling on a random regular graph.
    Mcmc(McmcArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

/// Where the potential vector comes from. Exactly one source is allowed.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ThetaArgs {
    /// Potentials as a JSON array, e.g. `[1,1,1,2]`.
    #[arg(long, conflicts_with_all = ["theta_file", "family"])]
    pub theta: Option<String>,
    /// File holding the JSON array.
    #[arg(long, conflicts_with = "family")]
    pub theta_file: Option<PathBuf>,
    /// Named family: binomial, truncated_poisson, truncated_geometric.
    #[arg(long)]
    pub family: Option<String>,
    /// Degree; required with --family, checked against θ otherwise.
    #[arg(long)]
    pub delta: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ThetaArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ThetaArgs,
    #[arg(long, required_unless_present = "depths")]
    pub lambda_min: Option<f64>,
    #[arg(long, required_unless_present = "depths")]
    pub lambda_max: Option<f64>,
    /// Grid size; 0 yields a header-only CSV.
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Scale::Log)]
    pub scale: Scale,
    /// Tabulate lower, upper and extremal sequences at --lambda instead.
    #[arg(long, requires = "lambda")]
    pub depths: bool,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_depth: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub model: ThetaArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Also write the (lambda, verdict) grid here.
    #[arg(long)]
    pub grid_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    pub delta: usize,
    /// Direction as a JSON array of length Δ+1; defaults to the first unit vector.
    #[arg(long)]
    pub c: Option<String>,
    /// Write the (h, verdict) scan along the first unit vector as CSV.
    #[arg(long)]
    pub scan_e0: bool,
    #[arg(long, default_value_t = 1e3)]
    pub h_max: f64,
    /// Include analytic and numeric slopes in the report.
    #[arg(long)]
    pub slopes: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryArg {
    AllIncluded,
    AllExcluded,
    Free,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::AllIncluded => Boundary::AllIncluded,
            BoundaryArg::AllExcluded => Boundary::AllExcluded,
            BoundaryArg::Free => Boundary::Free,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ThetaArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = BoundaryArg::AllIncluded)]
    pub boundary: BoundaryArg,
    /// Also enumerate this graph (edge list: `n m` on the first line, then `m` lines `u v`).
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McmcArgs {
    #[command(flatten)]
    pub model: ThetaArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 200_000)]
    pub sweeps: u64,
    #[arg(long, default_value_t = 100_000)]
    pub burnin: u64,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub min_girth: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub thin: u64,
    /// Per-sample CSV (chain, sweep, inclusion density, neighbour counts).
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Comma-separated check names.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
}
