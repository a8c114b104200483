//! Command-line front end for `qsdc-core`.
//!
//! Problems are described by a JSON config (plant, algorithm tuning,
//! simulation setup); designs are JSON files holding the gain and, when
//! known, its certificate. Exit codes: 0 success, 1 bad input, 2 infeasible
//! or failed certificate, 3 solver failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod design;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qsdc", version, about = "Quantized sampled-data controller synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a gain and its certificate.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a design, searching for missing certificate parts.
    Verify {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Ignore P and multipliers in the design and search for them.
        #[arg(long)]
        gain_only: bool,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and write a CSV trace.
    Simulate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write attractor boundary samples; scalars go to stdout.
    Attractor {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of angular boundary samples.
        #[arg(long)]
        grid: Option<usize>,
    },
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Synthesize { config, out } => commands::synthesize(config, out),
        Command::Verify { design, config, gain_only, out } => commands::verify(design, config, *gain_only, out.as_ref()),
        Command::Simulate { design, config, out } => commands::simulate_cmd(design, config, out),
        Command::Attractor { design, config, out, grid } => commands::attractor_cmd(design, config, out, *grid),
    }
}
