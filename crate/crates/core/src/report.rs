//! Deterministic result reporting: one line per check, JSON for machines.
//!
//! Reports must be byte-identical for identical (config, seed) regardless of
//! thread count, so nothing time- or machine-dependent is serialized here;
//! wall-clock and cache statistics go to stderr at the CLI layer.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// measured quantity the check gates on
    pub value: f64,
    /// the pinned bound it is compared against
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let se = match self.stderr {
            Some(s) => format!(" (stderr {:.3e})", s),
            None => String::new(),
        };
        format!(
            "{verdict} {:<12} {:.6e} vs {:.1e}{se} — {}",
            self.name, self.value, self.bound, self.detail
        )
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    /// content hashes of every Gram table the run touched, keyed by shape
    pub gram_tables: BTreeMap<String, String>,
    /// named quantities computed on the side (no pass/fail meaning)
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            config,
            gram_tables: BTreeMap::new(),
            values: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    pub fn push(&mut self, check: CheckResult) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.checks.iter().map(CheckResult::line)
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_and_overall_pass() {
        let mut r = Report::new(RunConfig::default());
        r.push(CheckResult {
            name: "alpha".into(),
            value: 3.25e-10,
            bound: 1e-8,
            stderr: None,
            pass: true,
            detail: "ok".into(),
        });
        assert!(r.pass);
        let line = r.lines().next().unwrap();
        assert!(line.starts_with("PASS alpha"));
        assert!(line.contains("3.250000e-10 vs 1.0e-8"));
        r.push(CheckResult {
            name: "beta".into(),
            value: 2.0,
            bound: 1.0,
            stderr: Some(0.1),
            pass: false,
            detail: "too big".into(),
        });
        assert!(!r.pass);
        let line = r.checks[1].line();
        assert!(line.starts_with("FAIL beta"));
        assert!(line.contains("stderr 1.000e-1"));
    }

    #[test]
    fn json_is_stable_and_omits_runtime_knobs() {
        let mut r = Report::new(RunConfig {
            threads: 7,
            ..RunConfig::default()
        });
        r.gram_tables
            .insert("k16".into(), "deadbeef".into());
        let a = r.to_json().unwrap();
        assert!(!a.contains("threads"));
        r.config.threads = 2;
        let b = r.to_json().unwrap();
        assert_eq!(a, b, "thread count must not leak into report bytes");
    }
}
