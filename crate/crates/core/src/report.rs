//! Check records and verification reports shared by all verification sweeps.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

use crate::cli::ScenarioConfig;

/// One verified identity: `passed ⇔ residual ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub point: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRecord {
    pub fn new(
        id: impl Into<String>,
        anchor: impl Into<String>,
        point: &[f64],
        residual: f64,
        tolerance: f64,
    ) -> Self {
        let residual = if residual.is_finite() {
            residual
        } else {
            f64::MAX
        };
        Self {
            id: id.into(),
            anchor: anchor.into(),
            point: digest(point),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// A boolean outcome expressed as residual 0 (true) or 1 (false) against tolerance 0.
    pub fn flag(id: impl Into<String>, anchor: impl Into<String>, point: &[f64], ok: bool) -> Self {
        Self::new(id, anchor, point, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// Short hex digest of a sampled point.
pub fn digest(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(&h.finalize()[..6])
}

/// Running maximum of a residual over a sweep, remembering the worst point.
#[derive(Clone, Debug, Default)]
pub struct Worst {
    residual: f64,
    point: Vec<f64>,
    failed: bool,
}

impl Worst {
    pub fn update(&mut self, residual: f64, point: &[f64]) {
        if !residual.is_finite() {
            self.failed = true;
            self.point = point.to_vec();
        } else if !self.failed && (residual > self.residual || self.point.is_empty()) {
            self.residual = residual;
            self.point = point.to_vec();
        }
    }

    pub fn residual(&self) -> f64 {
        if self.failed {
            f64::INFINITY
        } else {
            self.residual
        }
    }

    pub fn record(&self, id: &str, anchor: &str, tolerance: f64) -> CheckRecord {
        CheckRecord::new(id, anchor, &self.point, self.residual(), tolerance)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(checks: &[CheckRecord]) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        Self {
            total: checks.len(),
            passed,
            failed: checks.len() - passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub config: ScenarioConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    /// Sorts checks by id and fills in the summary.
    pub fn new(
        scenario: impl Into<String>,
        config: ScenarioConfig,
        mut checks: Vec<CheckRecord>,
    ) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let summary = Summary::of(&checks);
        Self {
            scenario: scenario.into(),
            config,
            checks,
            summary,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn find(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario: {}  seed: {}",
            self.scenario, self.config.seed
        );
        let width = self
            .checks
            .iter()
            .map(|c| c.id.len())
            .max()
            .unwrap_or(2)
            .max(2);
        let _ = writeln!(
            out,
            "{:<6} {:<width$} {:>12} {:>12}  {:<12}  anchor",
            "status", "id", "residual", "tolerance", "point"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<6} {:<width$} {:>12.3e} {:>12.3e}  {:<12}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.residual,
                c.tolerance,
                c.point,
                c.anchor
            );
        }
        let _ = writeln!(
            out,
            "total {}  passed {}  failed {}",
            self.summary.total, self.summary.passed, self.summary.failed
        );
        out
    }
}
