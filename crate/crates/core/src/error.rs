use thiserror::Error;

use crate::variational::DiscreteSolution;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested case is outside the scope of the closed form.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Adaptive quadrature hit its depth budget before reaching the
    /// tolerance; `best_estimate` is the value accumulated so far.
    #[error("quadrature did not converge to tol {tol:e}; best estimate {best_estimate}")]
    Quadrature { best_estimate: f64, tol: f64 },

    /// Conjugate gradient hit its iteration budget; the best iterate is kept.
    #[error("conjugate gradient stalled after {iterations} iterations (residual {residual:e})")]
    Solver {
        iterations: usize,
        residual: f64,
        best: Box<DiscreteSolution>,
    },

    /// A policy produced a non-finite trading rate during integration.
    #[error("non-finite trading rate at step {step} (t = {t})")]
    Integration { step: usize, t: f64 },

    /// A path's terminal wealth overflowed the exponential utility.
    #[error("utility overflow on path {path_index} (terminal wealth {wealth})")]
    PathOverflow { path_index: u64, wealth: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
