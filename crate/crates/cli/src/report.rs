//! Run artifacts: deterministic CSV emission and a JSON report per experiment.
//!
//! CSV bytes must be identical across re-runs with the same seed, so floats
//! are written with `Display` (shortest round-trip decimal, `.` separator, no
//! locale, no exponent form for the magnitudes that occur here) and rows end
//! with a bare `\n`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use mledist::curve::{CdfCurve, DensityCurve};

/// Outcome of one in-run check; any failure flips the process exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything a run leaves behind besides the CSVs themselves: a config
/// echo, the emitted file list, summary statistics (each recomputable from
/// the CSVs), and the check outcomes.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    /// Wall-clock of the run; the one field that varies between re-runs.
    pub wall_ms: u64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            seed,
            config: BTreeMap::new(),
            files: Vec::new(),
            summary: BTreeMap::new(),
            assertions: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn cfg(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn write_json(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_report.json", self.experiment));
        let body = serde_json::to_string_pretty(self).context("report serialization")?;
        fs::write(&path, body + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Top-level artifact of `all`: the base seed plus every report, in the
/// fixed experiment order.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub seed: u64,
    pub experiments: &'a [ExperimentReport],
}

pub fn write_manifest(dir: &Path, seed: u64, reports: &[ExperimentReport]) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&Manifest {
        seed,
        experiments: reports,
    })
    .context("manifest serialization")?;
    fs::write(&path, body + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes `header` then `rows`, newline-terminated.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut body = String::with_capacity(1 << 16);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row);
        body.push('\n');
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// `z,value,method` rows for distribution curves sharing one schema; the
/// method label is the caller's, not the curve kind, so two empirical curves
/// in one file stay distinguishable.
pub fn cdf_rows(curves: &[(&str, &CdfCurve<f64>)]) -> Vec<String> {
    let mut rows = Vec::new();
    for (label, curve) in curves {
        for (&z, &v) in curve.grid().points().iter().zip(curve.values()) {
            rows.push(format!("{z},{v},{label}"));
        }
    }
    rows
}

/// Same schema for densities.
pub fn density_rows(curves: &[(&str, &DensityCurve<f64>)]) -> Vec<String> {
    let mut rows = Vec::new();
    for (label, curve) in curves {
        for (&z, &v) in curve.grid().points().iter().zip(curve.values()) {
            rows.push(format!("{z},{v},{label}"));
        }
    }
    rows
}
