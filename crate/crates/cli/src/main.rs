//! Config-driven experiment runner for multipatch spectral studies.
//!
//! `patchspec run --config FILE [--out DIR] [--seed N] [--override k=v ...]`
//! executes one experiment and writes CSV data plus gnuplot scripts;
//! `patchspec list` prints the experiment registry. Exit codes: 0 success,
//! 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use patchspec_cli::config::{Config, ConfigError};
use patchspec_cli::{experiments, registry};

#[derive(Parser)]
#[command(name = "patchspec", version, about = "Spectral studies of multipatch spline discretizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a key=value config file.
    Run {
        /// Path to the configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for CSV files and plot scripts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Random seed recorded in every output header.
        #[arg(long)]
        seed: Option<u64>,
        /// Override configuration fields, e.g. --override degree=4.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the experiment registry.
    List {
        /// Emit one tab-separated line per experiment.
        #[arg(long)]
        machine: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { machine } => {
            if machine {
                registry::print_machine();
            } else {
                registry::print_human();
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            seed,
            overrides,
        } => match run(config, out, seed, overrides) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("{err:#}");
                ExitCode::from(classify(&err))
            }
        },
    }
}

fn run(
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    overrides: Vec<String>,
) -> anyhow::Result<()> {
    let mut cfg = Config::from_file(&config)?;
    for spec in &overrides {
        cfg.apply_override(spec)?;
    }
    if let Some(seed) = seed {
        cfg.set("seed", seed);
    } else if cfg.get("seed").is_none() {
        cfg.set("seed", 0);
    }
    std::fs::create_dir_all(&out)?;
    experiments::run(&cfg, &out)
}

/// Exit code classification: configuration problems (including invalid
/// parameter combinations rejected by the kernels) are 2, numerical
/// failures are 3.
fn classify(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<patchspec::Error>() {
        Some(patchspec::Error::InvalidArgument(_)) => 2,
        Some(_) => 3,
        None => 3,
    }
}
