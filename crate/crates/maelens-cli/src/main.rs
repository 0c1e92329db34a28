//! `maelens`: generate correlated data, solve masked/denoising autoencoder
//! optima in closed form, validate them against the Monte-Carlo oracle, and
//! run the kernel/entropy/boundary/spectrum/Gabor analyses.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 statistical
//! validation failure.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::args::{AnalyzeCommand, GenDataArgs, SolveArgs, ValidateArgs};

#[derive(Parser)]
#[command(name = "maelens", version, about, max_term_width = 100)]
struct Cli {
    /// Worker-thread cap (default: MAELENS_THREADS or all cores). Results
    /// never depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a data matrix CSV (Ising ring spins or Gaussian rows).
    GenData(GenDataArgs),
    /// Solve the closed-form optimum and write A.csv, B.csv, solution.json.
    Solve(SolveArgs),
    /// Compare the Monte-Carlo mask loss against the closed form (z-test).
    Validate(ValidateArgs),
    /// Kernel profiles, entropy histograms, boundary emphasis, mask
    /// spectra, and the Gabor task sweep.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

/// Error carrying the process exit code; message already user-readable.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn statistical(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<maelens::Error> for CliError {
    fn from(e: maelens::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("MAELENS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    maelens::exec::configure_threads(threads);

    let result = match cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Solve(args) => commands::solve(args),
        Command::Validate(args) => commands::validate(args),
        Command::Analyze(cmd) => commands::analyze(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
