//! `nrev`: generate, corrupt, denoise and evaluate photon-count data.

mod config;
mod data;
mod denoise;
mod error;
mod evaluate;
mod files;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nrev", version, about = "Photon-count noise reversal experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic ground truth CSV and its sidecar
    Generate(data::GenerateArgs),
    /// Add Poisson background noise to a CSV
    Corrupt(data::CorruptArgs),
    /// Recover the signal from a noisy CSV
    Denoise(Box<denoise::DenoiseArgs>),
    /// Compare a recovered CSV against the truth
    Evaluate(evaluate::EvaluateArgs),
    /// Run generate, corrupt, denoise and evaluate over noise levels and seeds
    Sweep(Box<sweep::SweepArgs>),
}

/// Caps the worker pool from `NR_THREADS` (0 or unset leaves rayon's default).
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("NR_THREADS must be a nonnegative integer, got '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Generate(a) => data::generate(&a),
        Command::Corrupt(a) => data::corrupt(&a),
        Command::Denoise(a) => denoise::denoise(&a),
        Command::Evaluate(a) => evaluate::evaluate(&a),
        Command::Sweep(a) => sweep::sweep(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
