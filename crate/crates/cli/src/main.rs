//! `cqed`: success-probability bounds, drive synthesis, round-trip
//! verification and parameter sweeps for cavity-QED single-photon sources.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cqed", version, about = "Cavity-QED single-photon source toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML file with flat parameter keys
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for output files and the run manifest (stdout otherwise)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Integrator tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Samples per time grid, or points per sweep axis
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Pulse width: absolute, or a multiple of the critical width with a `tc` suffix (e.g. `10tc`).
    /// Repeat or comma-separate for several values.
    #[arg(long, global = true, value_name = "TAU")]
    pub tau: Vec<String>,
    /// Requested success probability as a fraction of its maximum
    #[arg(long, global = true)]
    pub ps_fraction: Option<f64>,
    /// Two-photon detuning
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub detuning_u: Option<f64>,
    /// One-photon detuning
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub detuning_e: Option<f64>,
    /// Report times in units of 1/gamma and rates in units of gamma
    #[arg(long, global = true)]
    pub gamma_units: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Bound over (gamma tau, g/kappa) at fixed C and escape efficiency
    Fig2,
    /// Bound over (gamma tau, kappa_ex/kappa_in) at fixed C_in, with the optimal-coupling ridge
    Fig6,
    /// Optimal transmittance over (gamma tau, L_cav) for a lossy cavity
    Fig7,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum success probability for one or more pulse widths
    Psmax,
    /// Populations and drive over time for one pulse
    Dynamics,
    /// Synthesize the drive field as CSV
    Drive {
        /// Target waveform CSV: (t, value) or (t, re, im)
        #[arg(long, value_name = "PATH")]
        waveform: Option<PathBuf>,
        /// Absolute success probability (required with --waveform)
        #[arg(long)]
        ps: Option<f64>,
    },
    /// Synthesize, simulate and compare with the target photon
    Verify,
    /// Two-dimensional parameter sweep
    Sweep {
        #[arg(value_enum)]
        name: SweepKind,
    },
    /// Check a physical cavity design against the three conditions
    Design,
    /// Optimize the external coupling rate
    OptimizeKex,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context::new(cli.common)?;
    match cli.command {
        Command::Psmax => commands::psmax::run(&ctx),
        Command::Dynamics => commands::dynamics::run(&ctx),
        Command::Drive { waveform, ps } => commands::drive::run(&ctx, waveform, ps),
        Command::Verify => commands::verify::run(&ctx),
        Command::Sweep { name } => commands::sweep::run(&ctx, name),
        Command::Design => commands::design::run(&ctx),
        Command::OptimizeKex => commands::optimize_kex::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
