//! Pass/fail bookkeeping shared by every verifier.
//!
//! A verifier never panics on a violated bound. It records a [`CheckOutcome`]
//! in a [`Report`] and lets the caller decide whether a failure is fatal
//! (see [`Report::ensure`]).

use std::fmt;

use crate::error::{Error, Result};

/// Relative slack granted to inequalities, on the favorable side only.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Relative tolerance for identities that hold exactly in real arithmetic.
pub const EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub required: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, observed: f64, required: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            observed,
            required,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }

    /// One `check_name,status,observed,required` line.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e}",
            self.name,
            self.status(),
            self.observed,
            self.required
        )
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] observed {:e}, required {:e}",
            self.name,
            self.status(),
            self.observed,
            self.required
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: CheckOutcome) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// `observed >= required`, with relative slack on the favorable side.
    pub fn at_least(&mut self, name: impl Into<String>, observed: f64, required: f64, slack: f64) {
        let passed = observed >= required - slack * required.abs();
        self.push(CheckOutcome::new(name, passed, observed, required));
    }

    /// `observed <= bound`, with relative slack on the favorable side.
    pub fn at_most(&mut self, name: impl Into<String>, observed: f64, bound: f64, slack: f64) {
        let passed = observed <= bound + slack * bound.abs();
        self.push(CheckOutcome::new(name, passed, observed, bound));
    }

    /// Records a deviation against a tolerance.
    pub fn within(&mut self, name: impl Into<String>, deviation: f64, tol: f64) {
        self.push(CheckOutcome::new(name, deviation <= tol, deviation, tol));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    /// Turns any failed check into [`Error::CheckFailed`].
    pub fn ensure(self) -> Result<Report> {
        let failed: Vec<_> = self.failures().cloned().collect();
        if failed.is_empty() {
            Ok(self)
        } else {
            Err(Error::CheckFailed(failed))
        }
    }
}

/// A computed value together with the checks made while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub value: T,
    pub report: Report,
}

impl<T> Verdict<T> {
    pub fn new(value: T, report: Report) -> Self {
        Verdict { value, report }
    }

    pub fn passed(&self) -> bool {
        self.report.all_passed()
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
