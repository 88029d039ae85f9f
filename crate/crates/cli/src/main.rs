//! `inls`: ground states, evolution, virial checks, scenarios and sweeps for the
//! inhomogeneous NLS `i u_t + Δu + μ|x|^{-b}|u|^α u = 0`.
//!
//! Exit codes: 0 success, 1 bad configuration or input, 2 solver, construction or
//! check failure, 3 numerically detected blowup.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inls_core::InlsError;

#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Config(String),
    /// Exit 2.
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Failure(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Failure(m) => write!(f, "failure: {m}"),
        }
    }
}

impl From<InlsError> for CliError {
    fn from(e: InlsError) -> Self {
        match e {
            InlsError::Parameter(_)
            | InlsError::Format(_)
            | InlsError::Io(_)
            | InlsError::Json(_)
            | InlsError::InsufficientData(_)
            | InlsError::Precondition(_) => CliError::Config(e.to_string()),
            InlsError::Resampling(_)
            | InlsError::NoConvergence { .. }
            | InlsError::Numerical(_)
            | InlsError::Construction(_)
            | InlsError::Search(_) => CliError::Failure(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "inls", version, about = "Numerical laboratory for the inhomogeneous NLS")]
struct Cli {
    /// Progress messages on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Sectioned configuration file (TOML); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $INLS_OUTPUT_DIR, then ./inls-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Defaults to the mass-critical power (4 − 2b)/d.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// +1 focusing, −1 defocusing.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvolveArgs {
    /// Initial data in the columnar field format.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub cfl_safety: Option<f64>,
    #[arg(long)]
    pub blowup_gradient_factor: Option<f64>,
    #[arg(long)]
    pub mass_drift_tol: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Virial weight: `quadratic`, `radial:<R>` or `1d` (repeatable).
    #[arg(long = "weight")]
    pub weights: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the ground state Q and write its profile and summary.
    GroundState {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evolve initial data (a field file or a `[data]` section) and record the trajectory.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// Check the virial identities and bounds along a checkpointed trajectory.
    VirialCheck {
        #[command(flatten)]
        common: Common,
        /// Output directory of an `evolve` run with checkpoints.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long = "weight")]
        weights: Vec<String>,
        #[arg(long)]
        tol_first: Option<f64>,
        #[arg(long)]
        tol_second: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        bound_slack: Option<f64>,
    },
    /// Build initial data for a named blowup hypothesis.
    Scenario {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run a grid of scenarios concurrently and tabulate the verdicts.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Ctx { verbose: cli.verbose };
    let result = match cli.command {
        Command::GroundState { common, params, grid, tol } => commands::ground_state::run(&ctx, common, params, grid, tol),
        Command::Evolve { common, params, grid, evolve } => commands::evolve::run(&ctx, common, params, grid, evolve),
        Command::VirialCheck { common, trajectory, weights, tol_first, tol_second, eps, bound_slack } => {
            commands::virial_check::run(
                &ctx,
                common,
                commands::virial_check::Flags { trajectory, weights, tol_first, tol_second, eps, bound_slack },
            )
        }
        Command::Scenario { common, params, grid } => commands::scenario::run(&ctx, common, params, grid),
        Command::Sweep { common, evolve } => commands::sweep::run(&ctx, common, evolve),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("inls: {e}");
            ExitCode::from(e.code())
        }
    }
}
