//! Run configuration: defaults, a JSON config file (or the header of a
//! previous output) and command-line flags, merged in that order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use mpsplit::{Base, MethodSpec, Sequence};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Coeffs,
    Precession,
    Envelope,
    Order,
    Integrate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Coeffs => "coeffs",
            Command::Precession => "precession",
            Command::Envelope => "envelope",
            Command::Order => "order",
            Command::Integrate => "integrate",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Double,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Harmonic,
    Kepler,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(field: &str, text: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(text.trim().to_ascii_lowercase()))
        .map_err(|_| CliError::Config(format!("invalid value {text:?} for {field}")))
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Comma-separated step counts, e.g. 1,2,3
    #[arg(long)]
    pub seq: Option<String>,
    /// Use the natural sequence 1..n
    #[arg(long)]
    pub natural: Option<usize>,
    /// Base stepper: vv or pv
    #[arg(long)]
    pub base: Option<String>,
    /// Method specs, comma-separated or repeated (fr, nystrom4, m4, mpe:pv:1,2,3, ...)
    #[arg(long)]
    pub method: Vec<String>,
    /// harmonic or kepler
    #[arg(long)]
    pub system: Option<String>,
    /// Comma-separated eccentricities
    #[arg(long)]
    pub e: Option<String>,
    /// Steps per orbital period for integrate
    #[arg(long)]
    pub steps_per_period: Option<u64>,
    /// Number of periods for integrate
    #[arg(long)]
    pub periods: Option<u64>,
    /// Step sizes as steps per period (1000 or 2pi/1000), coarse to fine
    #[arg(long)]
    pub h_schedule: Option<String>,
    /// Even orders for the envelope sweep, e.g. 4,6,8
    #[arg(long)]
    pub orders: Option<String>,
    /// double or extended
    #[arg(long)]
    pub backend: Option<String>,
    /// text, csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON config file, or a previous output to replay
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Config-file view: every field optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PartialConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seq: Option<String>,
    #[serde(default)]
    pub natural: Option<usize>,
    #[serde(default)]
    pub base: Option<String>,
    #[serde(default)]
    pub method: Option<Vec<String>>,
    #[serde(default)]
    pub system: Option<SystemKind>,
    #[serde(default)]
    pub e: Option<Vec<f64>>,
    #[serde(default)]
    pub steps_per_period: Option<u64>,
    #[serde(default)]
    pub periods: Option<u64>,
    #[serde(default)]
    pub h_schedule: Option<Vec<u64>>,
    #[serde(default)]
    pub orders: Option<Vec<u32>>,
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

/// Fully resolved configuration. This is what every output embeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub natural: Option<usize>,
    pub base: String,
    pub method: Vec<String>,
    pub system: SystemKind,
    pub e: Vec<f64>,
    pub steps_per_period: u64,
    pub periods: u64,
    pub h_schedule: Vec<u64>,
    pub orders: Vec<u32>,
    pub backend: Backend,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

/// Split a comma list of method specs, re-joining the step counts of
/// `mpe:<base>:k1,k2,...` entries.
pub fn split_methods(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let continues = token.chars().all(|c| c.is_ascii_digit())
            && out.last().is_some_and(|prev| prev.starts_with("mpe:"));
        match out.last_mut() {
            Some(prev) if continues => {
                prev.push(',');
                prev.push_str(token);
            }
            _ => out.push(token.to_string()),
        }
    }
    out
}

fn parse_list<T: FromStr>(field: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Config(format!("invalid entry {t:?} in --{field}")))
        })
        .collect()
}

/// `1000` or `2pi/1000`, both meaning `h = 2π/1000`.
fn parse_schedule(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let digits = t
                .strip_prefix("2pi/")
                .or_else(|| t.strip_prefix("2π/"))
                .unwrap_or(t);
            digits
                .parse()
                .map_err(|_| CliError::Config(format!("invalid entry {t:?} in --h-schedule")))
        })
        .collect()
}

impl Flags {
    fn to_partial(&self) -> Result<PartialConfig> {
        let method = if self.method.is_empty() {
            None
        } else {
            Some(self.method.iter().flat_map(|m| split_methods(m)).collect())
        };
        Ok(PartialConfig {
            command: None,
            seq: self.seq.clone(),
            natural: self.natural,
            base: self.base.clone(),
            method,
            system: self
                .system
                .as_deref()
                .map(|s| parse_enum("system", s))
                .transpose()?,
            e: self.e.as_deref().map(|s| parse_list("e", s)).transpose()?,
            steps_per_period: self.steps_per_period,
            periods: self.periods,
            h_schedule: self.h_schedule.as_deref().map(parse_schedule).transpose()?,
            orders: self
                .orders
                .as_deref()
                .map(|s| parse_list("orders", s))
                .transpose()?,
            backend: self
                .backend
                .as_deref()
                .map(|s| parse_enum("backend", s))
                .transpose()?,
            format: self
                .format
                .as_deref()
                .map(|s| parse_enum("format", s))
                .transpose()?,
            out: self.out.clone(),
            jobs: self.jobs,
        })
    }
}

impl PartialConfig {
    /// Fields set in `over` replace those in `self`.
    fn overlay(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            command: over.command.or(self.command),
            seq: over.seq.or(self.seq),
            natural: over.natural.or(self.natural),
            base: over.base.or(self.base),
            method: over.method.or(self.method),
            system: over.system.or(self.system),
            e: over.e.or(self.e),
            steps_per_period: over.steps_per_period.or(self.steps_per_period),
            periods: over.periods.or(self.periods),
            h_schedule: over.h_schedule.or(self.h_schedule),
            orders: over.orders.or(self.orders),
            backend: over.backend.or(self.backend),
            format: over.format.or(self.format),
            out: over.out.or(self.out),
            jobs: over.jobs.or(self.jobs),
        }
    }
}

/// Prefix of the CSV header line holding the resolved config.
pub const CONFIG_LINE: &str = "# config: ";

/// Read a config file. Previous outputs (CSV with a config header line, or
/// a JSON document with a `config` member) replay their embedded config,
/// minus the output path.
pub fn load_config_file(path: &Path) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Config(format!("{}: {e}", path.display()));
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix(CONFIG_LINE)) {
        let mut cfg: PartialConfig = serde_json::from_str(line).map_err(bad)?;
        cfg.out = None;
        return Ok(cfg);
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    match value.get("config") {
        Some(embedded) if value.get("rows").is_some() => {
            let mut cfg: PartialConfig = serde_json::from_value(embedded.clone()).map_err(bad)?;
            cfg.out = None;
            Ok(cfg)
        }
        _ => serde_json::from_value(value).map_err(bad),
    }
}

/// Merge defaults, config file and flags for `command`, then validate.
pub fn resolve(command: Command, flags: &Flags) -> Result<BenchConfig> {
    let from_file = match &flags.config {
        Some(path) => load_config_file(path)?,
        None => PartialConfig::default(),
    };
    if let Some(c) = from_file.command {
        if c != command {
            return Err(CliError::Config(format!(
                "config was written by `{c}`, not `{command}`"
            )));
        }
    }
    let merged = from_file.overlay(flags.to_partial()?);
    finish(command, merged)
}

fn finish(command: Command, p: PartialConfig) -> Result<BenchConfig> {
    let default_methods: &[&str] = match command {
        Command::Precession => &["fr", "nystrom4", "m4"],
        Command::Order => &["vv"],
        Command::Integrate => &["mpe6vv"],
        Command::Coeffs | Command::Envelope => &[],
    };
    let default_schedule: &[u64] = match command {
        Command::Precession => &[1000, 2000, 4000],
        Command::Envelope => &[25, 50, 100, 200, 400, 800, 1600, 3200],
        Command::Order => &[20, 40, 80, 160],
        Command::Coeffs | Command::Integrate => &[],
    };
    let default_system = match command {
        Command::Order => SystemKind::Harmonic,
        _ => SystemKind::Kepler,
    };
    let default_e: &[f64] = match command {
        Command::Precession | Command::Envelope => &[0.9],
        _ => &[0.5],
    };
    let cfg = BenchConfig {
        command,
        seq: p.seq,
        natural: p.natural,
        base: p.base.unwrap_or_else(|| "pv".into()),
        method: p
            .method
            .unwrap_or_else(|| default_methods.iter().map(|s| s.to_string()).collect()),
        system: p.system.unwrap_or(default_system),
        e: p.e.unwrap_or_else(|| default_e.to_vec()),
        steps_per_period: p.steps_per_period.unwrap_or(200),
        periods: p.periods.unwrap_or(10),
        h_schedule: p.h_schedule.unwrap_or_else(|| default_schedule.to_vec()),
        orders: p.orders.unwrap_or_else(|| {
            if command == Command::Envelope {
                vec![4, 6, 8]
            } else {
                vec![]
            }
        }),
        backend: p.backend.unwrap_or(Backend::Double),
        format: p.format.unwrap_or(if command == Command::Coeffs {
            Format::Text
        } else {
            Format::Csv
        }),
        out: p.out,
        jobs: p.jobs.unwrap_or(0),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl BenchConfig {
    pub fn base(&self) -> Result<Base> {
        self.base
            .parse()
            .map_err(|e: mpsplit::Error| CliError::Config(e.to_string()))
    }

    pub fn methods(&self) -> Result<Vec<MethodSpec>> {
        self.method
            .iter()
            .map(|m| {
                m.parse()
                    .map_err(|e: mpsplit::Error| CliError::Config(e.to_string()))
            })
            .collect()
    }

    /// The sequence named by `seq` or `natural`.
    pub fn sequence(&self) -> Result<Sequence> {
        match (&self.seq, self.natural) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "--seq and --natural are mutually exclusive".into(),
            )),
            (Some(s), None) => Ok(s.parse()?),
            (None, Some(n)) => Ok(mpsplit::natural_sequence(n)?),
            (None, None) => Err(CliError::Config(
                "one of --seq or --natural is required".into(),
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |m: String| Err(CliError::Config(m));
        self.base()?;
        self.methods()?;
        if let Some(e) = self.e.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return err(format!("eccentricity {e} is outside [0, 1)"));
        }
        if self.h_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return err("h-schedule must refine strictly (increasing steps per period)".into());
        }
        if self.h_schedule.contains(&0) || self.steps_per_period == 0 {
            return err("step counts must be positive".into());
        }
        if self.periods == 0 {
            return err("periods must be >= 1".into());
        }
        if let Some(o) = self
            .orders
            .iter()
            .find(|&&o| o % 2 == 1 || !(4..=16).contains(&o))
        {
            return err(format!("order {o} is not an even integer in 4..=16"));
        }
        match self.command {
            Command::Coeffs => {
                self.sequence()?;
            }
            Command::Precession | Command::Order => {
                if self.method.is_empty() {
                    return err("at least one --method is required".into());
                }
                if self.h_schedule.len() < 2 {
                    return err("h-schedule needs at least two entries".into());
                }
            }
            Command::Envelope => {
                if self.orders.is_empty() || self.h_schedule.is_empty() {
                    return err("envelope needs --orders and --h-schedule".into());
                }
            }
            Command::Integrate => {
                if self.method.len() != 1 {
                    return err("integrate takes exactly one --method".into());
                }
            }
        }
        Ok(())
    }

    /// Config JSON as embedded in outputs.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
