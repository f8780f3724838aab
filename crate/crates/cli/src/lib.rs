//! Command-line front end: scenario loading, the five subcommands, and
//! the CSV/SVG/JSON writers behind them.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod render;
pub mod scenario;

pub use commands::PolicyArg;

/// Failures split by exit code: bad input (2) versus a well-formed
/// problem whose structure or verification fails (1).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Failure(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<formctl_core::Error> for CliError {
    fn from(e: formctl_core::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "formctl",
    version,
    about = "Decentralized formation-gain synthesis for single-integrator agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Check the communication graph against the pole-placement hypotheses
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Synthesize gains, verify spectrum and formation, write a gain file
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        policy: PolicyArg,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Resolve targets and gains agent-by-agent; print the round trace
    Protocol {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Integrate the closed loop; export trajectory CSV and SVG plots
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        policy: PolicyArg,
        /// Integrator step (default: 0.1 / fastest pole)
        #[arg(long)]
        dt: Option<f64>,
        /// Run length in seconds (default: 10 / slowest pole)
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Cross-check a matrix: matching-based char poly vs numeric vs eigensolver
    Verify {
        /// Square comma-separated matrix file
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Formation vector; checks A*F = 0
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        formation: Option<Vec<f64>>,
        /// Requested follower poles; checked against the spectrum
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        poles: Option<Vec<f64>>,
        /// Cross-check random systems instead of a file (optionally: how many)
        #[arg(long, num_args = 0..=1, default_missing_value = "100")]
        random: Option<usize>,
        /// Random system size
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check { scenario } => commands::cmd_check(&scenario).map(|_| ()),
        Command::Synth {
            scenario,
            policy,
            out,
        } => commands::cmd_synth(&scenario, policy, &out).map(|_| ()),
        Command::Protocol { scenario } => commands::cmd_protocol(&scenario).map(|_| ()),
        Command::Simulate {
            scenario,
            policy,
            dt,
            horizon,
            out,
        } => commands::cmd_simulate(&scenario, policy, dt, horizon, &out).map(|_| ()),
        Command::Verify {
            matrix,
            formation,
            poles,
            random,
            size,
            seed,
        } => commands::cmd_verify(&commands::VerifyArgs {
            matrix,
            formation,
            poles,
            random,
            size,
            seed,
        }),
    }
}
