use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use geomech::verify::Report;
use geomech::Chirality;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::{Kind, SCHEMA_VERSION};

/// Sampled time series with a fixed column order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text with a header row; values use the shortest representation
    /// that reads back to the same `f64`.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Column names `prefix_0 … prefix_{n−1}`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

/// Newton solve statistics of a `spline_bvp` run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShootingSummary {
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// `(ξ(0), ξ̇(0), ξ̈(0))`.
    pub initial_jet: Vec<Vec<f64>>,
}

/// Machine-readable result of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub chirality: Chirality,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Step actually used, which divides the horizon exactly.
    pub dt: f64,
    pub samples: usize,
    pub columns: Vec<String>,
    /// Named components of the final state.
    pub final_state: BTreeMap<String, Vec<f64>>,
    /// Conservation monitors and residuals (largest deviation from the
    /// initial value over the run).
    pub monitors: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shooting: Option<ShootingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<Report>,
}

impl Summary {
    pub fn new(kind: Kind, group: Option<String>, chirality: Chirality) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            group,
            chirality,
            t_end: 0.0,
            dt: 0.0,
            samples: 0,
            columns: Vec::new(),
            final_state: BTreeMap::new(),
            monitors: BTreeMap::new(),
            shooting: None,
            verify: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Result of running a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Summary,
}

impl Outcome {
    /// Write `trajectory.csv` (when there is a time series) and
    /// `summary.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |what: &str, e: std::io::Error| CliError::Io(format!("{what} {}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(|e| io("creating", e))?;
        if !self.table.columns.is_empty() {
            fs::write(dir.join("trajectory.csv"), self.table.to_csv()?).map_err(|e| io("writing into", e))?;
        }
        let mut f = fs::File::create(dir.join("summary.json")).map_err(|e| io("writing into", e))?;
        writeln!(f, "{}", self.summary.to_json()).map_err(|e| io("writing into", e))
    }
}
