//! `horonet`: reproducible experiments over the registered models. Every
//! command reads one JSON config (flags take precedence), writes CSV/JSON
//! artifacts stamped with the config hash, and uses only seeded
//! randomness. Exit codes: 0 success, 2 config error, 3 infeasible
//! construction, 4 degenerate result.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use horonet_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Degenerate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Degenerate(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::MarginTooSmall { .. } => CliError::Infeasible(e.to_string()),
            CoreError::Disconnected(_, _) => CliError::Degenerate(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "horonet", version, about = "Net, action and quotient experiments on split-family models")]
struct Cli {
    /// JSON config file; flags override file keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Model tag: h2, h3, sl2r or sl3r.
    #[arg(long, global = true)]
    model: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Root data, grading and KAN reconstruction residuals of the model.
    GroupInfo,
    /// Build a net window and report margin, points and covering radius.
    NetBuild,
    /// Displacement profiles of the acting lattice elements.
    Displace,
    /// Separation and ball-count profile of the net window.
    Udbg,
    /// Orbit quotient: class distances, metric axioms, coarse-model check.
    Quotient,
    /// Boundary-to-size ratio profile of a Cayley ball sequence.
    Folner,
    /// Bounded-displacement matching between two offset grids.
    Match,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides =
        Overrides { model: cli.model.clone(), seed: cli.seed, out: cli.out.clone() };
    let config = match ExperimentConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };
    let result = match cli.command {
        Command::GroupInfo => commands::group_info(&config),
        Command::NetBuild => commands::net_build(&config),
        Command::Displace => commands::displace(&config),
        Command::Udbg => commands::udbg(&config),
        Command::Quotient => commands::quotient(&config),
        Command::Folner => commands::folner(&config),
        Command::Match => commands::matching(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
