//! Tabular output shared by all subcommands.
//!
//! CSV layout:
//!
//! ```text
//! # mpsplit 0.1.0
//! # schema: precession/1
//! # config: {"command":"precession",...}
//! method,e,steps_per_period,...
//! fr,0.9,1000,...
//! ```
//!
//! The JSON form carries the same `version`, `schema`, `config` and
//! `columns`, plus `rows` as arrays of typed cells. Floats are written as
//! shortest round-trip decimals in both.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::{BenchConfig, CONFIG_LINE};
use crate::error::Result;

pub const VERSION: &str = concat!("mpsplit ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_finite() => ryu::Buffer::new().format_finite(*x).to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// `<command>/<version>`.
    pub schema: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `#` lines written after the config line.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(schema: &str, columns: &[&'static str]) -> Self {
        Self {
            schema: schema.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, cfg: &BenchConfig, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {VERSION}")?;
        writeln!(out, "# schema: {}", self.schema)?;
        writeln!(out, "{CONFIG_LINE}{}", cfg.to_json())?;
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, cfg: &BenchConfig) -> Value {
        let config: Value = serde_json::from_str(&cfg.to_json()).expect("valid json");
        json!({
            "version": VERSION,
            "schema": self.schema,
            "config": config,
            "notes": self.notes,
            "columns": self.columns,
            "rows": self
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect::<Vec<_>>(),
        })
    }

    pub fn write_json(&self, cfg: &BenchConfig, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *out, &self.to_json(cfg))
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> crate::error::CliError {
    std::io::Error::other(e.to_string()).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_shortest_round_trip_form() {
        for x in [0.9, -231336.61835386054, 1e-7, 2.0, 6.283185307179586e-3] {
            let s = Cell::Float(x).csv();
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(Cell::Float(0.1).csv(), "0.1");
        assert_eq!(Cell::Int(-3).csv(), "-3");
        assert_eq!(Cell::Empty.csv(), "");
    }
}
