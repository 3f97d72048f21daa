//! Command-line driver for exclusion-process experiments on gasket graphs.
//!
//! Subcommands: build-graph, simulate, pde, rate, lln-experiment, validate.
//! Every run is described by one JSON config (`--config`), with `--seed`,
//! `--out`, `--threads` and repeatable `--set key=value` overrides. Log
//! verbosity comes from the `HYDRO_LOG` environment variable.
//!
//! Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.

// Validations use negated comparisons (`!(x > 0.0)`) so NaN lands on the
// rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Kind};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn describe(&self) -> (&'static str, &str) {
        match self {
            Failure::Config(m) => ("config error", m),
            Failure::Numerical(m) => ("numerical failure", m),
            Failure::Io(m) => ("i/o error", m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Core errors raised while a run is executing count as numerical failures;
/// the same errors raised while the run is being assembled are config errors.
pub fn setup_err(e: hydro_core::Error) -> Failure {
    Failure::Config(e.to_string())
}

pub fn run_err(e: hydro_core::Error) -> Failure {
    Failure::Numerical(e.to_string())
}

#[derive(Parser)]
#[command(name = "hydro", version, about = "Boundary-driven exclusion dynamics on gasket graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON config (or to a manifest of a previous run).
    #[arg(long)]
    config: PathBuf,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the worker-thread count (0 = all hardware threads).
    #[arg(long)]
    threads: Option<usize>,
    /// Override an individual config key (dotted path), repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the level-N gasket graph as JSON.
    BuildGraph(RunArgs),
    /// Run simulation replicas and write snapshot and current ledgers.
    Simulate(RunArgs),
    /// Integrate the hydrodynamic equation and write the trajectory.
    Pde(RunArgs),
    /// Evaluate the rate functionals on a trajectory.
    Rate(RunArgs),
    /// Replica ensemble against the solver reference, with a deviation report.
    LlnExperiment(RunArgs),
    /// Check a config without executing it.
    Validate(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::BuildGraph(a)
            | Command::Simulate(a)
            | Command::Pde(a)
            | Command::Rate(a)
            | Command::LlnExperiment(a)
            | Command::Validate(a) => a,
        }
    }

    fn expected_kind(&self) -> Option<Kind> {
        match self {
            Command::BuildGraph(_) => Some(Kind::BuildGraph),
            Command::Simulate(_) => Some(Kind::Simulate),
            Command::Pde(_) => Some(Kind::Pde),
            Command::Rate(_) => Some(Kind::Rate),
            Command::LlnExperiment(_) => Some(Kind::LlnExperiment),
            Command::Validate(_) => None,
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Io(format!("cannot read {:?}: {e}", args.config)))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{:?}: invalid JSON: {e}", args.config)))?;
    if let Some(inner) = value.get("config") {
        value = inner.clone();
    }
    ExperimentConfig::apply_overrides(&mut value, &args.set).map_err(Failure::Config)?;
    let mut cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| Failure::Config(format!("schema error: {e}")))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    let cfg = load_config(command.args())?;
    if let Some(expected) = command.expected_kind() {
        if cfg.kind != expected {
            return Err(Failure::Config(format!(
                "config kind '{}' does not match the '{}' subcommand",
                cfg.kind.as_str(),
                expected.as_str()
            )));
        }
    }
    if let Command::Validate(_) = command {
        return commands::validate::run(&cfg);
    }
    let errors = cfg.validate();
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("config error: {e}");
        }
        return Err(Failure::Config(format!("{} invalid field(s)", errors.len())));
    }
    match cfg.kind {
        Kind::BuildGraph => commands::build_graph::run(&cfg),
        Kind::Simulate => commands::simulate::run(&cfg),
        Kind::Pde => commands::pde::run(&cfg),
        Kind::Rate => commands::rate::run(&cfg),
        Kind::LlnExperiment => commands::lln::run(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("HYDRO_LOG")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (kind, message) = failure.describe();
            eprintln!("hydro: {kind}: {message}");
            ExitCode::from(failure.exit_code())
        }
    }
}
