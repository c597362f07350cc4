use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};

/// How a row's observed value is judged against its reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `|observed - reference| <= tolerance * se`
    WithinSe,
    /// `|observed - reference| <= tolerance * |reference|`
    Relative,
    /// `|observed - reference| <= tolerance`
    Absolute,
    /// `observed <= reference + tolerance * se`
    AtMost,
    /// `observed >= reference - tolerance * se`
    AtLeast,
    /// Informational; always passes.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub observed: f64,
    pub reference: f64,
    pub se: f64,
    pub check: Check,
    pub tolerance: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(name: impl Into<String>, observed: f64, reference: f64, se: f64, check: Check, tolerance: f64) -> Self {
        let gap = (observed - reference).abs();
        let pass = match check {
            Check::WithinSe => gap <= tolerance * se,
            Check::Relative => gap <= tolerance * reference.abs(),
            Check::Absolute => gap <= tolerance,
            Check::AtMost => observed <= reference + tolerance * se,
            Check::AtLeast => observed >= reference - tolerance * se,
            Check::Info => true,
        };
        ReportRow { name: name.into(), observed, reference, se, check, tolerance, pass }
    }

    pub fn info(name: impl Into<String>, observed: f64) -> Self {
        Self::new(name, observed, f64::NAN, f64::NAN, Check::Info, f64::NAN)
    }

    /// Pass/fail row for a condition that is not a numeric comparison.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let x = if ok { 1.0 } else { 0.0 };
        Self::new(name, x, 1.0, f64::NAN, Check::Absolute, 0.0)
    }
}

/// Result of one study or ensemble run. Rows are deterministic for a given
/// configuration and seed; `runtime` is kept out of the CSV output.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub id: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    /// Replicas that failed, with their error messages.
    pub failures: Vec<(u64, String)>,
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        ExperimentReport { id: id.into(), seed, rows: Vec::new(), failures: Vec::new(), runtime: Duration::ZERO }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn passed(&self) -> bool {
        !self.partial() && self.rows.iter().all(|r| r.pass)
    }

    /// Failed rows, for diagnostics.
    pub fn failed_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        for (replica, message) in &self.failures {
            let row = ReportRow::new(format!("replica {replica} failed: {message}"), f64::NAN, f64::NAN, f64::NAN, Check::Absolute, 0.0);
            w.serialize(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes `<dir>/<id>.csv` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.id));
        fs::write(&path, self.to_csv()?)?;
        Ok(path)
    }

    /// One line: id, verdict, row counts and runtime.
    pub fn summary(&self) -> String {
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        format!(
            "{}: {} ({} rows, {} failed{}) in {:.1}s",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.rows.len(),
            failed,
            if self.partial() { format!(", {} replicas failed", self.failures.len()) } else { String::new() },
            self.runtime.as_secs_f64()
        )
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes a plain table (header plus rows) as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r.iter().map(|x| format!("{x:e}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
