//! Experiment reports: named thresholds, CSV tables, a JSON summary and a
//! content-derived run id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Result, SilError};

/// One acceptance check `value ≤ bound` or `value ≥ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

impl Threshold {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Threshold {
            name: name.into(),
            value,
            relation: "<=",
            bound,
            pass: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Threshold {
            name: name.into(),
            value,
            relation: ">=",
            bound,
            pass: value >= bound,
        }
    }

    /// A yes/no property, recorded as 1 or 0 against the bound 1.
    pub fn holds(name: &str, ok: bool) -> Self {
        Threshold::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    /// A failed computation, recorded with a NaN value.
    pub fn failed(name: &str) -> Self {
        Threshold {
            name: name.into(),
            value: f64::NAN,
            relation: "error",
            bound: f64::NAN,
            pass: false,
        }
    }
}

/// A numeric table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text; floats use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Parses a table written by [`Table::to_csv`].
pub fn parse_table(name: &str, text: &str) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| SilError::InvalidInput(format!("{name}: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| SilError::InvalidInput(format!("{name}: {e}")))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
        let row = row.map_err(|e| SilError::InvalidInput(format!("{name}: {e}")))?;
        if row.len() != columns.len() {
            return Err(SilError::InvalidInput(format!("{name}: ragged row")));
        }
        rows.push(row);
    }
    Ok(Table {
        name: name.into(),
        columns,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub pass: bool,
    pub fitted_orders: BTreeMap<String, f64>,
    pub thresholds: Vec<Threshold>,
    pub run_id: String,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    config_text: String,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_text: &str) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            pass: false,
            fitted_orders: BTreeMap::new(),
            thresholds: Vec::new(),
            run_id: String::new(),
            details: serde_json::Value::Null,
            tables: Vec::new(),
            config_text: config_text.into(),
        }
    }

    pub fn check(&mut self, t: Threshold) {
        self.thresholds.push(t);
    }

    /// Sets `pass` and derives the run id from the configuration, the
    /// tables and the thresholds.
    pub fn finish(mut self) -> Self {
        self.pass = !self.thresholds.is_empty() && self.thresholds.iter().all(|t| t.pass);
        let mut h = Sha256::new();
        h.update(self.experiment.as_bytes());
        h.update(self.config_text.as_bytes());
        for t in &self.tables {
            h.update(t.name.as_bytes());
            h.update(t.to_csv().as_bytes());
        }
        for t in &self.thresholds {
            h.update(format!("{}{:?}{}{:?}", t.name, t.value, t.relation, t.bound).as_bytes());
        }
        for (k, v) in &self.fitted_orders {
            h.update(format!("{k}{v:?}").as_bytes());
        }
        let digest = h.finalize();
        self.run_id = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        self
    }

    pub fn failures(&self) -> Vec<&Threshold> {
        self.thresholds.iter().filter(|t| !t.pass).collect()
    }
}

/// Writes every table as `<name>.csv` and each report as
/// `<experiment>.json` under `out`, returning the written paths.
pub fn emit_report(reports: &[ExperimentReport], out: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(SilError::InvalidInput("no results to report".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| SilError::io(out, e))?;
    let mut written = Vec::new();
    for r in reports {
        for t in &r.tables {
            let path = out.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.to_csv()).map_err(|e| SilError::io(&path, e))?;
            written.push(path);
        }
        let path = out.join(format!("{}.json", r.experiment));
        let text = serde_json::to_string_pretty(r).map_err(|e| SilError::io(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| SilError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_and_pass() {
        assert!(Threshold::at_most("a", 1.0, 1.0).pass);
        assert!(!Threshold::at_least("b", f64::NAN, 0.0).pass);
        let mut r = ExperimentReport::new("x", "k = v\n");
        r.check(Threshold::holds("c", true));
        let r = r.finish();
        assert!(r.pass && r.run_id.len() == 12);
        assert!(!ExperimentReport::new("x", "").finish().pass);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Table::new("t", &["eps", "v"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![0.05, 1e-300]);
        let back = parse_table("t", &t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.to_csv().lines().next(), Some("eps,v"));
    }

    #[test]
    fn empty_results_are_an_error() {
        let dir = std::env::temp_dir().join("sil-report-empty");
        assert!(emit_report(&[], &dir).is_err());
    }
}
