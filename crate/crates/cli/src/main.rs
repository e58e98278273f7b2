//! `vrpvqe`: exact solve, VQE runs, noise sweeps and a self-check.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 configuration error,
//! 3 dimension guard, 4 backend incompatibility.

mod commands;
mod config;
mod error;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vrpvqe::experiment::BackendChoice;

use crate::config::{read_any, AnyConfig, Overrides};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "vrpvqe", version, about = "Noisy VQE for small vehicle routing instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Brute-force ground state of an instance and its decoded routes.
    Solve {
        /// Instance JSON.
        #[arg(long)]
        config: PathBuf,
        /// Result JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One VQE run (best of `starts` seeded restarts).
    Vqe {
        #[arg(long)]
        config: PathBuf,
        /// Result JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Noise sweep writing raw and aggregate CSVs into a directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Checks channel completeness, encoding equivalence, unitarity and
    /// trajectory/density agreement; optionally checks a config file.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_sign_error: bool,
    },
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Raise the density-matrix qubit limit.
    #[arg(long)]
    allow_large_density: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Statevector,
    Density,
    Trajectories,
}

impl RunFlags {
    fn overrides(&self) -> CliResult<Overrides> {
        Overrides {
            backend: self.backend.map(|b| match b {
                BackendArg::Statevector => BackendChoice::Statevector,
                BackendArg::Density => BackendChoice::Density,
                BackendArg::Trajectories => BackendChoice::Trajectories,
            }),
            allow_large_density: self.allow_large_density,
            seed: None,
        }
        .with_env_seed()
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { config, out } => commands::solve(&config, out.as_deref()),
        Command::Vqe { config, out, run } => commands::vqe(&config, out.as_deref(), run.jobs, run.overrides()?),
        Command::Sweep { config, out, run } => {
            commands::sweep(&config, &out, run.jobs, run.overrides()?).map(|_| ())
        }
        Command::Validate {
            config,
            inject_sign_error,
        } => {
            if let Some(path) = config {
                match read_any(&path)? {
                    AnyConfig::Run(c) => c.validate()?,
                    AnyConfig::Sweep(c) => c.validate()?,
                }
                println!("config {}: ok", path.display());
            }
            let checks = validate::run_checks(inject_sign_error);
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {}", c.name, c.detail);
            }
            match checks.iter().filter(|c| !c.passed).count() {
                0 => Ok(()),
                failed => Err(CliError::Validation { failed }),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
