// `!(x > y)` comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_config, RunConfig};

/// Simulation and verification driver for spherically symmetric
/// compressible flow in a ball.
#[derive(Parser)]
#[command(name = "ballflow", version, about)]
struct Cli {
    /// Run configuration file (flat `key = value` text)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV output
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Override the seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Refinement levels for the convergence study
    #[arg(long, global = true, default_value_t = 2)]
    refine: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and emit the diagnostics CSV
    Simulate,
    /// Verify the gradient/divergence estimates over a random corpus
    VerifyEstimates,
    /// Check feasibility of the weighted interpolation exponents
    CknCheck {
        /// Also evaluate the empirical sup ratio over a seeded corpus
        #[arg(long)]
        empirical: bool,
    },
    /// Twin run with perturbed data plus the Gronwall contraction report
    UniquenessRun,
    /// Grid/time refinement study
    Convergence,
}

/// Usage and configuration problems exit 2; failed runtime assertions
/// exit 1.
enum AppError {
    Usage(anyhow::Error),
    Failure(anyhow::Error),
}

fn load_config(cli: &Cli) -> Result<RunConfig, AppError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        AppError::Usage(anyhow::anyhow!(
            "--config <path> is required for this subcommand"
        ))
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(AppError::Usage)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn seed_for(cli: &Cli) -> Result<u64, AppError> {
    match (&cli.config, cli.seed) {
        (_, Some(s)) => Ok(s),
        (Some(_), None) => Ok(load_config(cli)?.seed),
        (None, None) => Ok(0),
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            commands::simulate(&cfg, &cli.out).map_err(AppError::Failure)
        }
        Command::VerifyEstimates => {
            let seed = seed_for(cli)?;
            commands::verify_estimates(seed, 1000, &cli.out).map_err(AppError::Failure)
        }
        Command::CknCheck { empirical } => {
            let seed = seed_for(cli)?;
            commands::ckn_check(seed, *empirical).map_err(AppError::Failure)
        }
        Command::UniquenessRun => {
            let cfg = load_config(cli)?;
            commands::uniqueness_run(&cfg, &cli.out).map_err(AppError::Failure)
        }
        Command::Convergence => {
            let cfg = load_config(cli)?;
            commands::convergence(&cfg, cli.refine, &cli.out).map_err(AppError::Failure)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(AppError::Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
