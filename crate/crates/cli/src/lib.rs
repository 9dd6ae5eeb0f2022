//! Command-line driver for simulated and recorded photon-counting
//! tomography runs.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::CliError;

use crate::commands::{calibration_text, Overrides};
use crate::config::{DatasetFormat, RunConfig};
use crate::report::summary;

#[derive(Debug, Parser)]
#[command(name = "wigner-pnr", version, about = "Simulate and reconstruct displaced-parity Wigner tomography")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DatasetFormat::Csv,
            FormatArg::Jsonl => DatasetFormat::Jsonl,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full simulated experiment and write datasets and a report.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Rebuild the Wigner grid, profile and fit from a counts dataset.
    Reconstruct {
        dataset: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Estimate displacement amplitudes from a calibration dataset.
    Calibrate {
        dataset: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print a summary of a report or reconstruction document.
    Report { path: PathBuf },
}

fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Simulate {
            config,
            seed,
            out_dir,
            format,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            Overrides {
                seed,
                out_dir,
                format: format.map(Into::into),
            }
            .apply(&mut cfg);
            let report = commands::simulate(&cfg)?;
            Ok(format!("wrote {}\n{}", cfg.output.dir.display(), summary(&report)))
        }
        Command::Reconstruct { dataset, out_dir } => {
            let report = commands::reconstruct(&dataset, &out_dir)?;
            Ok(format!("wrote {}\n{}", out_dir.display(), summary(&report)))
        }
        Command::Calibrate { dataset, out_dir } => {
            let rows = commands::calibrate(&dataset, &out_dir)?;
            Ok(calibration_text(&rows))
        }
        Command::Report { path } => commands::report(&path),
    }
}

/// Runs a parsed command line, returning the text to print.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
            pool.install(|| execute(cli.command))
        }
        None => execute(cli.command),
    }
}
