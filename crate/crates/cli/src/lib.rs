//! Command-line front end: sweeps over methods, eccentricities and step
//! sizes with reproducible CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::io::Write;

use clap::{Parser, Subcommand};

use crate::commands::Output;
use crate::config::{resolve, Command, Flags, Format};
pub use crate::error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mpsplit",
    version,
    about = "Multi-product splitting integrators and Kepler benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Exact extrapolation weights for a step sequence
    Coeffs(Flags),
    /// LRL precession per period and its error coefficient
    Precession(Flags),
    /// Error against force evaluations for the minimal family, with envelope
    Envelope(Flags),
    /// Measured convergence order
    Order(Flags),
    /// Trajectory sampled once per period
    Integrate(Flags),
}

impl Sub {
    fn parts(&self) -> (Command, &Flags) {
        match self {
            Sub::Coeffs(f) => (Command::Coeffs, f),
            Sub::Precession(f) => (Command::Precession, f),
            Sub::Envelope(f) => (Command::Envelope, f),
            Sub::Order(f) => (Command::Order, f),
            Sub::Integrate(f) => (Command::Integrate, f),
        }
    }
}

/// Run one subcommand, writing to `--out` or to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let (command, flags) = cli.command.parts();
    let cfg = resolve(command, flags)?;
    let output = match command {
        Command::Coeffs => commands::coeffs(&cfg)?,
        Command::Precession => commands::precession(&cfg)?,
        Command::Envelope => commands::envelope(&cfg)?,
        Command::Order => commands::order(&cfg)?,
        Command::Integrate => commands::integrate_cmd(&cfg)?,
    };
    let mut buf: Vec<u8> = Vec::new();
    match output {
        Output::Text(text) => buf.extend_from_slice(text.as_bytes()),
        Output::Table(table) => match cfg.format {
            Format::Json => table.write_json(&cfg, &mut buf)?,
            Format::Csv => table.write_csv(&cfg, &mut buf)?,
            Format::Text => {
                return Err(CliError::Config(format!(
                    "`{command}` writes csv or json, not text"
                )))
            }
        },
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => stdout.write_all(&buf)?,
    }
    Ok(())
}
