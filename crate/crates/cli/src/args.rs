use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "kintraffic",
    version,
    about = "Discrete-velocity kinetic traffic model: trajectories, equilibria and fundamental diagrams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate from uniform (or seeded random) initial data toward equilibrium.
    Simulate(SimulateArgs),
    /// Equilibrium at a single density.
    Equilibrium(EquilibriumArgs),
    /// Flux-density and speed-density diagrams over a density grid.
    Diagram(DiagramArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of speed classes.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Interaction-rate constant.
    #[arg(long, default_value_t = 1.0)]
    pub eta0: f64,
}

#[derive(Debug, Args)]
pub struct IntegrationArgs {
    /// Time step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Integration horizon.
    #[arg(long = "t-final", default_value_t = 1.0e5)]
    pub t_final: f64,
    /// Stop once the 1-norm of the right-hand side drops below this.
    #[arg(long = "steady-tol", default_value_t = 1e-10)]
    pub steady_tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Road density in [0, 1].
    #[arg(long)]
    pub rho: f64,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Draw the initial state uniformly from the simplex with this seed
    /// instead of splitting the density evenly.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record every k-th step in the trajectory CSV.
    #[arg(long = "record-stride", default_value_t = 100)]
    pub record_stride: usize,
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EquilibriumMethod {
    Recursive,
    Integrate,
    Bruteforce,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = EquilibriumMethod::Recursive)]
    pub method: EquilibriumMethod,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Seeded random initial state for `--method integrate`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMethod {
    Recursive,
    Integrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Dimensionless,
    Physical,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of uniform grid intervals on [0, 1]; 1/2 is always sampled.
    #[arg(long = "rho-steps", default_value_t = 200)]
    pub rho_steps: usize,
    #[arg(long, value_enum, default_value_t = SweepMethod::Recursive)]
    pub method: SweepMethod,
    #[arg(long, value_enum, default_value_t = UnitsArg::Dimensionless)]
    pub units: UnitsArg,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Worker threads for the sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
    #[arg(long = "out-svg")]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check class counts 2..=n-max.
    #[arg(long = "n-max", default_value_t = 6)]
    pub n_max: usize,
    #[arg(long, default_value_t = kintraffic::sampling::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long = "inject-corrupt-table", hide = true)]
    pub inject_corrupt_table: bool,
}
