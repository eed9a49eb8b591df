//! Structured experiment results.
//!
//! A report is a list of rows. Each row carries a measured value (usually a
//! residual) and a tolerance; an ordinary check passes when the value is at
//! most the tolerance, a negative control passes when it exceeds it. Reports
//! serialize to JSON and the rows to CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GeometryError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    /// Passes when `value <= tolerance`.
    Check,
    /// Passes when `value > tolerance`: a deliberately wrong input must be detected.
    NegativeControl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub id: String,
    pub kind: RowKind,
    /// Chart point the row was evaluated at (empty for global rows).
    pub point: Vec<f64>,
    /// Short hex digest of the row inputs.
    pub inputs: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRow {
    pub fn check(id: impl Into<String>, point: &[f64], value: f64, tolerance: f64) -> Self {
        Self::new(id.into(), RowKind::Check, point, value, tolerance)
    }

    pub fn negative_control(id: impl Into<String>, point: &[f64], value: f64, threshold: f64) -> Self {
        Self::new(id.into(), RowKind::NegativeControl, point, value, threshold)
    }

    /// Row recording a failed computation.
    pub fn error(id: impl Into<String>, point: &[f64], err: &GeometryError) -> Self {
        let mut row = Self::new(id.into(), RowKind::Check, point, f64::INFINITY, 0.0);
        row.pass = false;
        row.note = Some(format!("error: {err}"));
        row
    }

    fn new(id: String, kind: RowKind, point: &[f64], value: f64, tolerance: f64) -> Self {
        let inputs = digest(&id, point);
        let pass = evaluate(kind, value, tolerance);
        CheckRow { id, kind, point: point.to_vec(), inputs, value, tolerance, pass, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Re-evaluates `pass` under a new tolerance.
    pub fn retolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
        if self.value.is_finite() {
            self.pass = evaluate(self.kind, self.value, tolerance);
        }
    }

    /// Whether the stored `pass` flag agrees with value and tolerance.
    pub fn consistent(&self) -> bool {
        !self.value.is_finite() && !self.pass || self.pass == evaluate(self.kind, self.value, self.tolerance)
    }
}

fn evaluate(kind: RowKind, value: f64, tolerance: f64) -> bool {
    match kind {
        RowKind::Check => value <= tolerance,
        RowKind::NegativeControl => value > tolerance,
    }
}

fn digest(id: &str, point: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update(id.as_bytes());
    for x in point {
        h.update(x.to_le_bytes());
    }
    let out = h.finalize();
    out.iter().take(6).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest value among ordinary check rows.
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub model: String,
    /// Echo of the configuration that produced the report.
    #[serde(default)]
    pub config: serde_json::Value,
    pub rows: Vec<CheckRow>,
    /// Named measured quantities (fitted coefficients, extrapolated limits).
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    pub summary: Summary,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, model: impl Into<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            model: model.into(),
            config: serde_json::Value::Null,
            rows: Vec::new(),
            values: BTreeMap::new(),
            summary: Summary::default(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
        self.refresh();
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = CheckRow>) {
        self.rows.extend(rows);
        self.refresh();
    }

    pub fn set_value(&mut self, key: impl Into<String>, value: f64) {
        self.values.insert(key.into(), value);
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    /// Merges another report's rows and values, prefixing value keys.
    pub fn absorb(&mut self, other: ExperimentReport, prefix: &str) {
        for (k, v) in other.values {
            self.values.insert(format!("{prefix}{k}"), v);
        }
        self.extend(other.rows);
    }

    pub fn refresh(&mut self) {
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let max_residual = self
            .rows
            .iter()
            .filter(|r| r.kind == RowKind::Check)
            .map(|r| r.value)
            .fold(0.0, f64::max);
        self.summary = Summary { rows: self.rows.len(), passed, failed: self.rows.len() - passed, max_residual };
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn rows_with_id<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CheckRow> + 'a {
        self.rows.iter().filter(move |r| r.id == id)
    }

    /// Largest value over rows with the given id.
    pub fn max_value(&self, id: &str) -> Option<f64> {
        self.rows_with_id(id).map(|r| r.value).reduce(f64::max)
    }

    pub fn stamp_now(&mut self) {
        self.timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Rows as CSV with columns `identity-id, point, residual, tolerance, pass`.
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["identity-id", "kind", "point", "residual", "tolerance", "pass", "note"]).expect("in-memory write");
        for r in &self.rows {
            let point = r.point.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
            let kind = match r.kind {
                RowKind::Check => "check",
                RowKind::NegativeControl => "negative-control",
            };
            w.write_record([
                r.id.as_str(),
                kind,
                point.as_str(),
                &format!("{:e}", r.value),
                &format!("{:e}", r.tolerance),
                if r.pass { "true" } else { "false" },
                r.note.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// One line per row id: worst value, tolerance and pass state.
    pub fn render_text(&self) -> String {
        let mut ids: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !ids.contains(&r.id.as_str()) {
                ids.push(&r.id);
            }
        }
        let mut out = format!("{} on {}\n", self.experiment, self.model);
        for id in ids {
            let rows: Vec<&CheckRow> = self.rows_with_id(id).collect();
            let pass = rows.iter().all(|r| r.pass);
            let worst = match rows[0].kind {
                RowKind::Check => rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max),
                RowKind::NegativeControl => rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min),
            };
            let _ = writeln!(
                out,
                "  {:<34} {:>4}  value {:>11.3e}  tol {:>9.1e}  ({} rows)",
                id,
                if pass { "ok" } else { "FAIL" },
                worst,
                rows[0].tolerance,
                rows.len()
            );
        }
        for (k, v) in &self.values {
            let _ = writeln!(out, "  {k} = {v:.9}");
        }
        let _ = writeln!(out, "  {} of {} rows pass", self.summary.passed, self.summary.rows);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_value_and_tolerance() {
        let mut rep = ExperimentReport::new("x", "m");
        rep.push(CheckRow::check("a", &[0.0], 1e-9, 1e-8));
        rep.push(CheckRow::check("b", &[0.0], 1e-7, 1e-8));
        rep.push(CheckRow::negative_control("c", &[], 0.3, 0.05));
        assert_eq!(rep.summary.passed, 2);
        assert!(!rep.all_pass());
        assert!(rep.rows.iter().all(CheckRow::consistent));
        rep.rows[1].retolerance(1e-6);
        rep.refresh();
        assert!(rep.all_pass());
    }

    #[test]
    fn json_round_trip() {
        let mut rep = ExperimentReport::new("x", "m");
        rep.push(CheckRow::check("a", &[0.5, 1.0], 1e-9, 1e-8).with_note("n"));
        rep.set_value("h", 1.0);
        let back = ExperimentReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut rep = ExperimentReport::new("x", "m");
        rep.push(CheckRow::check("a", &[0.5], 1e-9, 1e-8));
        let csv = rep.rows_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("identity-id,"));
    }
}
