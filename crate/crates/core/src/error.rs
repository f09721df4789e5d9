use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the simulator can report.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a pointwise function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model, grid, state or configuration invariant is violated.
    /// `requirement` names the modelling assumption the check enforces.
    #[error("invalid {what}: {requirement}")]
    Validation { what: String, requirement: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {field} at cell {cell}")]
    NonFinite { field: &'static str, cell: usize },

    #[error("negative value {value:e} in {field} at cell {cell} after step at t={t}")]
    Negativity {
        field: &'static str,
        cell: usize,
        value: f64,
        t: f64,
    },

    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("monitor hard failure at t={t}: {checks}")]
    MonitorHardFailure { t: f64, checks: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sweep member eps={eps} failed: {source}")]
    SweepMember {
        eps: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(what: impl Into<String>, requirement: impl Into<String>) -> Self {
        Error::Validation {
            what: what.into(),
            requirement: requirement.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
