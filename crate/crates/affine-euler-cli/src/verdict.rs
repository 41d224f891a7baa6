use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub status: Status,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
}

/// Named checks of one run, ordered by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checks: BTreeMap<String, Check>,
}

impl Verdict {
    pub fn check(&mut self, name: &str, pass: bool, measured: f64, target: f64, tolerance: f64) {
        let status = if pass { Status::Pass } else { Status::Fail };
        self.checks.insert(name.into(), Check { status, measured, target, tolerance });
    }

    /// `|measured - target| <= rel |target|`.
    pub fn relative(&mut self, name: &str, measured: f64, target: f64, rel: f64) {
        let pass = (measured - target).abs() <= rel * target.abs();
        self.check(name, pass, measured, target, rel);
    }

    /// `measured <= bound`.
    pub fn at_most(&mut self, name: &str, measured: f64, bound: f64) {
        self.check(name, measured <= bound, measured, bound, 0.0);
    }

    /// `measured >= bound`.
    pub fn at_least(&mut self, name: &str, measured: f64, bound: f64) {
        self.check(name, measured >= bound, measured, bound, 0.0);
    }

    pub fn report(&mut self, name: &str, measured: f64, target: f64) {
        self.checks.insert(name.into(), Check { status: Status::ReportOnly, measured, target, tolerance: 0.0 });
    }

    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, c)| c.status == Status::Fail).map(|(k, _)| k.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        let mut v = Verdict::default();
        v.relative("rate", 1.1, 1.0, 0.15);
        v.at_most("drift", 1e-9, 1e-8);
        v.report("info", 3.0, f64::NAN);
        assert!(v.passed());
        v.at_least("order", 1.5, 1.8);
        assert!(!v.passed());
        assert_eq!(v.failures(), vec!["order"]);
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"report-only\"") && json.contains("\"fail\""));
    }
}
