//! `covpow` command-line front end. Each verb reads one JSON config and
//! writes a run directory with a hashed `manifest.json`.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{dispatch, Invocation};
use crate::error::{error_json, CliError};

#[derive(Parser)]
#[command(
    name = "covpow",
    version,
    about = "Structure-informed covariance power features"
)]
struct Cli {
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Run directory, overriding the config's `output_dir`. Relative paths
    /// sit under $COVPOW_OUTPUT_ROOT when set.
    #[arg(long, global = true)]
    output_dir: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Matérn field or a labelled two-class dataset.
    Simulate { config: PathBuf },
    /// Check structural consistency over a batch of random instances.
    Verify { config: PathBuf },
    /// Write power-transformed window covariances as a feature archive.
    Extract { config: PathBuf },
    /// Grid-search the exponent and window on train/validation data.
    Select { config: PathBuf },
    /// Score a fitted model on one split part.
    Evaluate { config: PathBuf },
    /// Pairwise AIR distance statistics of a feature archive.
    Geometry { config: PathBuf },
    /// Threshold feature magnitudes into class signatures.
    Signatures { config: PathBuf },
    /// Selection, evaluation, geometry and signatures in one run.
    Pipeline { config: PathBuf },
    /// Aggregate `verify` summaries.
    Report { config: PathBuf },
}

impl Command {
    fn parts(&self) -> (&'static str, &PathBuf) {
        match self {
            Command::Simulate { config } => ("simulate", config),
            Command::Verify { config } => ("verify", config),
            Command::Extract { config } => ("extract", config),
            Command::Select { config } => ("select", config),
            Command::Evaluate { config } => ("evaluate", config),
            Command::Geometry { config } => ("geometry", config),
            Command::Signatures { config } => ("signatures", config),
            Command::Pipeline { config } => ("pipeline", config),
            Command::Report { config } => ("report", config),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers == 0 {
        return Err(CliError::config("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    let (verb, config) = cli.command.parts();
    let inv = Invocation::load(verb, config, cli.output_dir.clone())?;
    let (dir, manifest) = dispatch(&inv)?;
    println!(
        "{}",
        serde_json::json!({
            "run_dir": dir.to_string_lossy(),
            "command": verb,
            "artifacts": manifest.artifacts.len(),
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
