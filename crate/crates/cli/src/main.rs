//! `loglin`: certify, simulate, verify and export.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O), 2 configuration error,
//! 3 certification infeasible, 4 containment violation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("certification infeasible: {0}")]
    Infeasible(String),
    #[error("containment violated: {0}")]
    Violation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Violation(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "loglin", version, about = "Invariant-set certification for multi-rotor tracking error")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Certificate bundle (JSON); `export` accepts several.
    #[arg(long, global = true)]
    pub bundle: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `simulation.runs`.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize gains and invariant sets; writes `bundle.json`.
    Certify,
    /// Monte-Carlo closed-loop runs; writes `runs/run*.csv` and `summary.json`.
    Simulate,
    /// Re-checks logged runs against a bundle; writes `verify.json`.
    Verify {
        /// Log files (default: `<out>/runs/*.csv`).
        logs: Vec<PathBuf>,
    },
    /// Figure data: set hulls and bound-versus-trajectory histories.
    Export,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("loglin: {e}");
            ExitCode::from(e.code())
        }
    }
}
