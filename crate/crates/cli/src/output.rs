//! Deterministic CSV and snapshot emission with atomic writes.

use std::path::{Path, PathBuf};

use nldiff::snapshot;
use nldiff::Field;

use crate::error::CliError;

/// One-line provenance header written above every CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self { command: command.into(), config_hash: config_hash.into() }
    }

    pub fn line(&self) -> String {
        format!("# nldiff {} command={} config={}", env!("CARGO_PKG_VERSION"), self.command, self.config_hash)
    }
}

/// Shortest round-trip decimal, switching to exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_bytes(&self, provenance: &Provenance) -> Vec<u8> {
        let mut out = provenance.line().into_bytes();
        out.push(b'\n');
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })
}

pub fn write_table(dir: &Path, name: &str, table: &Table, provenance: &Provenance) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    snapshot::write_atomic(&path, &table.to_bytes(provenance))?;
    Ok(path)
}

pub fn write_field(dir: &Path, name: &str, field: &Field) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    snapshot::save(field, &path)?;
    Ok(path)
}

/// File-name fragment for a time or a scale, e.g. `16`, `0.5`.
pub fn stamp(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_f64(16.0), "16");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1e-10), "1e-10");
        assert_eq!(fmt_f64(-3.5e20), "-3.5e20");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["t", "value"]);
        t.push_numbers(&[1.0, 0.5]);
        let text = String::from_utf8(t.to_bytes(&Provenance::new("demo", "abc"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# nldiff ") && lines[0].ends_with("command=demo config=abc"));
        assert_eq!(lines[1..], ["t,value", "1,0.5"]);
    }
}
