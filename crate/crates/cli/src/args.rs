use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rendezvous_core::dynamics::Lambda;
use rendezvous_core::simulate::{InitialKind, InitialPolicy};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "rendezvous",
    version,
    about = "Deadlock, stability and rendezvous analysis for N agents under motivation dynamics",
    after_help = "Exit status: 0 on success, 2 on invalid input, 1 on numerical failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one trajectory, write it as CSV and classify its regime.
    ///
    /// Defaults: sigma 1, lambda 1, horizon 500 time units, format csv. The
    /// regime label is printed on stderr for csv output and embedded in the
    /// document for json output.
    Simulate(SimulateArgs),
    /// Print the symmetric deadlock equilibrium.
    ///
    /// Defaults: sigma 1, lambda 1, format json. The residual is the max-norm
    /// of the vector field at the equilibrium.
    Equilibrium(EquilibriumArgs),
    /// Print the Jacobian spectrum at the deadlock point.
    ///
    /// Defaults: sigma 1, lambda 1, format csv (columns index,re,im). With
    /// `--lambda inf` the slow-limit Jacobian is used.
    Eigen(EigenArgs),
    /// Critical sigma against lambda (the deadlock-breaking curve).
    ///
    /// Defaults: format csv (columns lambda,sigma_critical,sigma_hat). A lambda
    /// whose bisection fails is written with sigma_critical = NaN.
    Boundary(BoundaryArgs),
    /// Classify regimes over a (sigma, lambda) grid.
    ///
    /// Defaults: format csv (columns sigma,lambda,label,metric_final,
    /// spread_final,initial). Rows are ordered by lambda, then sigma, then
    /// initial kind.
    Sweep(SweepArgs),
    /// Crossings of the plane a1 + a2 + a3 = 0 in normalized-value space (N = 3).
    ///
    /// Defaults: sigma 4, lambda 1, horizon 3000 time units, format csv
    /// (columns j,tau,a1,a2,a3,parity).
    Poincare(PoincareArgs),
    /// Check that the rendezvous metric revisits its minima.
    ///
    /// Defaults: sigma 4, lambda 1, horizon 500 time units, format json. Exits
    /// 0 whether or not the check holds; see the `passed` field.
    Recurrence(RecurrenceArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_lambda(s: &str) -> Result<Lambda, String> {
    s.parse::<Lambda>().map_err(|e| e.to_string())
}

fn parse_initial(s: &str) -> Result<InitialKind, String> {
    s.parse::<InitialKind>().map_err(|e| e.to_string())
}

fn parse_policy(s: &str) -> Result<InitialPolicy, String> {
    s.parse::<InitialPolicy>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML run manifest; explicit flags override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output format (csv or json) [default: per command].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the result to this file instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Number of agents N (>= 3) [default: 3].
    #[arg(long, short = 'n', value_name = "N")]
    pub n: Option<usize>,
    /// Motivation gain sigma (1/time, > 0) [default: per command].
    #[arg(long, value_name = "SIGMA", allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Value-filter rate lambda (1/time, > 0); `inf` selects the slow-manifold limit [default: 1].
    #[arg(long, value_name = "LAMBDA", allow_negative_numbers = true, value_parser = parse_lambda)]
    pub lambda: Option<Lambda>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Seed for the initial condition [default: 0].
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Initial condition: `generic` (independent random agents) or `symmetric` (all columns equal) [default: generic].
    #[arg(long, value_name = "KIND", value_parser = parse_initial)]
    pub initial: Option<InitialKind>,
    /// Integration horizon (time units) [default: per command].
    #[arg(long, value_name = "T", allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    /// Relative integrator tolerance [default: 1e-9].
    #[arg(long, value_name = "RTOL", allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    /// Absolute integrator tolerance [default: 1e-11].
    #[arg(long, value_name = "ATOL", allow_negative_numbers = true)]
    pub atol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of evenly spaced rows written, including both ends [default: 1001].
    #[arg(long, value_name = "COUNT")]
    pub samples: Option<usize>,
    /// Write positions in the original frame instead of the rotated one.
    #[arg(long)]
    pub original: bool,
}

#[derive(Args, Debug)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also run this many random-restart Newton searches on the symmetric subspace [default: 0].
    #[arg(long, value_name = "COUNT")]
    pub restarts: Option<usize>,
    /// Seed of the restart search [default: 0].
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EigenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of agents N (>= 3) [default: 3].
    #[arg(long, short = 'n', value_name = "N")]
    pub n: Option<usize>,
    /// Lambda values (1/time): `start:stop:count` or a comma list [default: 0.1:10:50].
    #[arg(long, value_name = "GRID")]
    pub lambda_grid: Option<String>,
    /// Bisection tolerance on sigma [default: 1e-10].
    #[arg(long, value_name = "TOL", allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Worker threads [default: all cores].
    #[arg(long, short = 'j', value_name = "JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of agents N (>= 3) [default: 3].
    #[arg(long, short = 'n', value_name = "N")]
    pub n: Option<usize>,
    /// Sigma values (1/time): `start:stop:count` or a comma list [default: 0.1:1:10].
    #[arg(long, value_name = "GRID")]
    pub sigma_grid: Option<String>,
    /// Lambda values (1/time): `start:stop:count` or a comma list; `inf` allowed in lists [default: 1].
    #[arg(long, value_name = "GRID")]
    pub lambda_grid: Option<String>,
    /// Initial conditions per cell: symmetric, generic or both [default: both].
    #[arg(long, value_name = "POLICY", value_parser = parse_policy)]
    pub initial: Option<InitialPolicy>,
    /// Seed shared by every cell's initial condition [default: 0].
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Integration horizon per cell (time units) [default: 500].
    #[arg(long, value_name = "T", allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    /// Worker threads [default: all cores].
    #[arg(long, short = 'j', value_name = "JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PoincareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Ignore crossings before this time (time units) [default: half the horizon].
    #[arg(long, value_name = "T", allow_negative_numbers = true)]
    pub from: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RecurrenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Revisit tolerance on the rendezvous metric (length units) [default: 0.1].
    #[arg(long, value_name = "EPS", allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
}
