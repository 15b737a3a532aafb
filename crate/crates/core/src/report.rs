//! Structured pass/warn/fail records for identity suites.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    /// Checks pass but a discrepancy with a stated formula was observed.
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub indices: Vec<i64>,
    pub lhs: String,
    pub rhs: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: String,
    pub table: Option<String>,
    pub total_cases: usize,
    pub passed_cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub failures: Vec<Failure>,
    pub convention_factors: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub details: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
}

impl VerificationReport {
    pub fn new(identity: impl Into<String>, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            table: None,
            total_cases: 0,
            passed_cases: 0,
            max_residual: 0.0,
            tolerance,
            failures: Vec::new(),
            convention_factors: BTreeMap::new(),
            warnings: Vec::new(),
            details: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn for_table(mut self, id: &str) -> Self {
        self.table = Some(id.to_string());
        self
    }

    /// Record one case; it passes when `residual <= tolerance`. NaN fails.
    pub fn check(&mut self, indices: &[i64], residual: f64, lhs: impl fmt::Display, rhs: impl fmt::Display) -> bool {
        self.total_cases += 1;
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = if residual.is_nan() { f64::NAN } else { residual };
        }
        let ok = residual <= self.tolerance;
        if ok {
            self.passed_cases += 1;
        } else {
            self.failures.push(Failure {
                indices: indices.to_vec(),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
                residual,
            });
        }
        ok
    }

    /// Record a boolean case with no numeric residual.
    pub fn check_bool(&mut self, indices: &[i64], ok: bool, what: impl fmt::Display) -> bool {
        let residual = if ok { 0.0 } else { f64::INFINITY };
        self.check(indices, residual, what, if ok { "holds" } else { "violated" })
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("serializable detail"));
    }

    pub fn status(&self) -> Status {
        if !self.failures.is_empty() || self.total_cases == 0 {
            Status::Fail
        } else if !self.warnings.is_empty() {
            Status::Warn
        } else {
            Status::Pass
        }
    }

    /// Passing includes `Warn`.
    pub fn ok(&self) -> bool {
        self.status() != Status::Fail
    }

    pub fn summary_line(&self) -> String {
        let table = self.table.as_deref().map(|t| format!(" [{t}]")).unwrap_or_default();
        format!(
            "{} {}{}: {}/{} cases, max residual {:.3e}",
            self.status(),
            self.identity,
            table,
            self.passed_cases,
            self.total_cases,
            self.max_residual
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_transitions() {
        let mut r = VerificationReport::new("demo", 1e-12);
        assert_eq!(r.status(), Status::Fail, "empty report must not pass");
        r.check(&[0], 0.0, "a", "b");
        assert_eq!(r.status(), Status::Pass);
        r.warn("stated coefficient differs");
        assert_eq!(r.status(), Status::Warn);
        assert!(r.ok());
        r.check(&[1], 1e-3, "a", "b");
        assert_eq!(r.status(), Status::Fail);
        assert_eq!(r.failures[0].indices, vec![1]);
        assert_eq!(r.max_residual, 1e-3);
        r.check(&[2], f64::NAN, "a", "b");
        assert!(r.max_residual.is_nan());
        assert_eq!(r.failures.len(), 2);
    }
}
