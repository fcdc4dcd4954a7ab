//! Command-line front end for `pullin-core`.
//!
//! A run loads one JSON configuration, applies `--set` overrides, validates everything, echoes
//! the resolved configuration into the output directory and then runs one command. Exit codes:
//! 0 on success, 1 for usage and configuration errors, 2 when a check or invariant fails.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::Value;

pub use commands::Outcome;
pub use config::{load_config, Config, ConfigError, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Split the drift into a gradient part and a weighted divergence-free part
    Decompose,
    /// Minimal solution at `solver.lambda`
    Solve,
    /// Minimal branch and the pull-in bracket
    Branch,
    /// Principal eigenpair of the linearization at `solver.lambda`
    Eigen,
    /// Inequality checks at every branch point
    Verify,
    /// Regularity diagnostic from the norm trends along the branch
    Diagnose,
    /// Radial shooting reference for the pull-in threshold
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Solve => "solve",
            Command::Branch => "branch",
            Command::Eigen => "eigen",
            Command::Verify => "verify",
            Command::Diagnose => "diagnose",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pullin",
    version,
    about = "Pull-in thresholds and estimates for the advected MEMS problem"
)]
pub struct Cli {
    pub command: Command,
    /// JSON configuration file
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Override a configuration key, e.g. `--set verify.beta=[1.5]`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = config::parse_override)]
    pub overrides: Vec<(String, Value)>,
    /// Output directory; overrides `output.directory`
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for the random test functions; overrides `verify.seed`
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad invocation, configuration or environment.
    Usage(String),
    /// A computation broke one of its invariants.
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Failed(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(m) | RunError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Usage(format!("config error: {e}"))
    }
}

/// Loads the configuration named by `cli` and runs its command.
pub fn run(cli: &Cli) -> Result<Outcome, RunError> {
    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.out {
        overrides.push((
            "output.directory".into(),
            Value::String(out.to_string_lossy().into_owned()),
        ));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("verify.seed".into(), Value::from(seed)));
    }
    let setup = load_config(&cli.config, &overrides)?;
    let threads = commands::thread_count()?;
    commands::execute(cli.command, &setup, threads)
}
