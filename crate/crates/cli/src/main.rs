use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hamsplit::experiments::{exit_code, run_normalform, run_scan, run_simulate, ExperimentConfig};
use hamsplit::Error;

/// Rounded spectral splitting for Hamiltonian PDEs, with resonance scans
/// and homological solves.
#[derive(Debug, Parser)]
#[command(name = "hamsplit", version)]
struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured initial data and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the configured step-size grid for numerical resonances.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the homological equation for a polynomial file.
    Normalform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        poly: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> hamsplit::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> hamsplit::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Simulate { config } => run_simulate(&load(config, cli.seed)?, &cli.out),
        Command::Scan { config } => run_scan(&load(config, cli.seed)?, &cli.out),
        Command::Normalform { config, poly } => run_normalform(&load(config, cli.seed)?, poly, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::Resonance { witness, divisor } = &err {
                eprintln!("witness: {witness} (divisor {divisor:e})");
            }
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
