use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oksphere::grid::ParamRange;

/// Axisymmetric critical points of the sharp-interface Ohta-Kawasaki energy on
/// the unit sphere.
///
/// Ranges are written start:end:count and include both ends. Every flag can
/// also be set in a JSON config file whose keys are the long flag names;
/// flags given on the command line win.
#[derive(Debug, Parser)]
#[command(name = "oksphere", version, max_term_width = 100)]
pub struct Cli {
    /// JSON config file with default flag values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files (stdout when neither this nor --out is set)
    #[arg(long, global = true, env = "OKSPHERE_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Path of the primary output file
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Seed recorded in every output and used by randomized sweeps
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy breakdown of one pattern (JSON)
    Energy(EnergyArgs),
    /// Two-interface energy over a (z1, gamma) grid (CSV)
    Sweep2(Sweep2Args),
    /// Sampled xi profile of a pattern (CSV)
    Xi(XiArgs),
    /// Solve, continue and check critical points
    Critical {
        #[command(subcommand)]
        action: CriticalCommand,
    },
    /// Explicit gamma(z1) curve of the 3- or 4-interface family (CSV)
    GammaCurve(GammaCurveArgs),
    /// Descent by elementary strip moves (JSON, trace CSV)
    Minimize(MinimizeArgs),
    /// Escape from a pole frame or a boundary configuration (JSON)
    Escape(EscapeArgs),
    /// Second-variation eigenvalues and instability certificates (JSON)
    Stability(StabilityArgs),
    /// Polar-cap lower bound on z1 over a gamma range (CSV)
    Bounds(BoundsArgs),
    /// Run the self-verification suite
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum CriticalCommand {
    /// Newton solve from an initial guess (JSON)
    Solve(SolveArgs),
    /// Continue a branch in gamma (JSON lines catalog)
    Continue(ContinueArgs),
    /// Criticality of the uniformly spaced pattern (JSON)
    CheckUniform(CheckUniformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Evaluator {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Printed,
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GuessArg {
    UniformZ,
    UniformAtanh,
    ExplicitCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Ascending,
    Shuffled,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Interface heights, comma separated and increasing
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub z: Vec<f64>,
    #[arg(long)]
    pub gamma: f64,
    /// Expected mass; rejected if it differs from the computed one
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, value_enum, default_value_t = Evaluator::ClosedForm)]
    pub evaluator: Evaluator,
}

#[derive(Debug, Args)]
pub struct Sweep2Args {
    /// z1 grid inside [-1, 0]; the second interface is z1 + 1
    #[arg(long, default_value = "-1:0:101", allow_hyphen_values = true)]
    pub z1: ParamRange,
    #[arg(long, default_value = "0.1:10:5")]
    pub gamma: ParamRange,
}

#[derive(Debug, Args)]
pub struct XiArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub z: Vec<f64>,
    /// Sample points on [-1, 1]
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long, value_enum, default_value_t = ConventionArg::Printed)]
    pub convention: ConventionArg,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub m_target: f64,
    /// Newton stopping tolerance on the residual max-norm
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Number of interfaces (ignored when --z is given)
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = GuessArg::UniformZ)]
    pub guess: GuessArg,
    /// Explicit starting interfaces
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    #[command(flatten)]
    pub system: SystemArgs,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub gamma_start: f64,
    #[arg(long)]
    pub gamma_end: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = GuessArg::UniformZ)]
    pub guess: GuessArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    /// Halvings allowed for a failed gamma increment
    #[arg(long, default_value_t = 2)]
    pub max_step_halvings: usize,
    #[command(flatten)]
    pub system: SystemArgs,
}

#[derive(Debug, Args)]
pub struct CheckUniformArgs {
    /// Number of interfaces
    #[arg(long)]
    pub count: usize,
    /// Upper end of the log-spaced gamma sweep starting at 1e-3
    #[arg(long, default_value_t = 1e4)]
    pub gamma_max: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Printed)]
    pub convention: ConventionArg,
}

#[derive(Debug, Args)]
pub struct GammaCurveArgs {
    /// 3 or 4
    #[arg(long)]
    pub branch: oksphere::criticality::Branch,
    #[arg(long, default_value = "0.01:0.68:200")]
    pub z1: ParamRange,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    /// Starting interfaces; their mass is conserved
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub z: Vec<f64>,
    #[arg(long)]
    pub gamma: f64,
    /// Move mirrored pairs together (needs a symmetric start)
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, value_enum, default_value_t = OrderArg::Ascending)]
    pub order: OrderArg,
    #[arg(long, default_value_t = 200)]
    pub max_cycles: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub x_tol: f64,
    /// Stop when a cycle lowers E/pi by less than this
    #[arg(long, default_value_t = 1e-13)]
    pub threshold: f64,
    /// Trace CSV path (defaults to minimize_trace.csv in the output directory)
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EscapeArgs {
    /// Lower end of the frame
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Upper end of the frame
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Also bisect for the smallest gamma at which the frame escapes
    #[arg(long)]
    pub threshold: bool,
    /// Boundary configuration instead of a frame: either z_n = 1 or one repeated value
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Critical pattern to test
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    /// Solve for an n-interface critical point from a uniform start instead of --z
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: f64,
    /// Fourier cutoff
    #[arg(long = "k-max", default_value_t = 32)]
    pub k_max: u32,
    #[arg(long, value_enum, default_value_t = ConventionArg::Variational)]
    pub convention: ConventionArg,
    /// Polish --z with a Newton solve before testing
    #[arg(long)]
    pub polish: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value = "0:10:11")]
    pub gamma: ParamRange,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these criteria (1-based)
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
}
