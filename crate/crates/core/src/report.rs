//! Check records and reports shared by every verification suite.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing was checkable. Never reported as a pass.
    Vacuous,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

/// One named property, checked over some number of instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The mathematical statement being checked.
    pub statement: String,
    pub verdict: Verdict,
    pub cases: usize,
    /// First counterexample, with exact rational values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Accumulates instances of one check and keeps the first failure.
#[derive(Debug)]
pub struct Checker {
    name: String,
    statement: String,
    cases: usize,
    witness: Option<Value>,
}

impl Checker {
    pub fn new(name: impl Into<String>, statement: impl Into<String>) -> Self {
        Self { name: name.into(), statement: statement.into(), cases: 0, witness: None }
    }

    /// Records one instance. The witness closure only runs on the first failure.
    pub fn check(&mut self, ok: bool, witness: impl FnOnce() -> Value) -> bool {
        self.cases += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some(witness());
        }
        ok
    }

    pub fn finish(self) -> CheckRecord {
        let verdict = if self.witness.is_some() {
            Verdict::Fail
        } else if self.cases == 0 {
            Verdict::Vacuous
        } else {
            Verdict::Pass
        };
        CheckRecord {
            name: self.name,
            statement: self.statement,
            verdict,
            cases: self.cases,
            witness: self.witness,
        }
    }
}

/// An ordered list of check records produced by one suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
    }

    /// True when nothing failed and at least one check actually ran.
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.verdict.is_fail())
            && self.checks.iter().any(|c| c.verdict == Verdict::Pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict.is_fail())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub checks: usize,
    pub failed: usize,
    pub vacuous: usize,
}

/// Top-level document emitted by the command-line driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub toolkit_version: String,
    pub command: String,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub result: Value,
    pub summary: Summary,
}

impl Report {
    /// Check order is fixed by name so identical runs serialize identically.
    pub fn new(command: impl Into<String>, config: Value, suite: SuiteReport, result: Value) -> Self {
        let mut checks = suite.checks;
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let failed = checks.iter().filter(|c| c.verdict.is_fail()).count();
        let vacuous = checks.iter().filter(|c| c.verdict == Verdict::Vacuous).count();
        let verdict = if failed > 0 { Verdict::Fail } else { Verdict::Pass };
        Self {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            command: command.into(),
            config,
            summary: Summary { verdict, checks: checks.len(), failed, vacuous },
            checks,
            result,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.verdict == Verdict::Pass
    }
}
