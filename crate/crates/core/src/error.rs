use thiserror::Error;

use crate::check::CheckOutcome;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A gradient evaluation produced NaN or an infinity.
    #[error("non-finite gradient at step {step}, point {point:?}")]
    NonFinite { step: usize, point: Vec<f64> },

    /// The hard-function builder produced an interval that breaks ordering or
    /// disjointness, which signals a numerical breakdown.
    #[error("construction invariant violated in phase {phase}: {detail}")]
    Construction { phase: usize, detail: String },

    /// The builder exceeded the phase cap implied by the finiteness bound on M.
    #[error("construction runaway: {phases} phases exceed the cap of {cap}")]
    Runaway { phases: usize, cap: usize },

    /// Perturbation too small relative to trajectory magnitudes.
    #[error("precision guard: eps = {eps:e} is below the required floor {floor:e}")]
    Precision { eps: f64, floor: f64 },

    #[error("parse error on line {line}: {detail}")]
    Parse { line: usize, detail: String },

    /// One or more checks failed where the caller asked for a hard result.
    #[error("{} check(s) failed; first: {}", .0.len(), .0.first().map(|c| c.to_string()).unwrap_or_default())]
    CheckFailed(Vec<CheckOutcome>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
