use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A caller passed inconsistent dimensions or out-of-range parameters.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Objective or Jacobian evaluation produced a non-finite value.
    #[error("evaluation failed for scenario {scenario}: {message}")]
    Evaluation { scenario: usize, message: String },

    #[error("unknown problem `{name}`; available: {available}")]
    UnknownProblem { name: String, available: String },

    /// An enumeration or grid exceeded its configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A linear-algebra or convergence failure inside a numerical kernel.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The direction subproblem hit its iteration cap; carries the best iterate.
    #[error("direction subproblem did not converge: gap {gap:.3e} at value {value}")]
    SubproblemNonconvergence { gap: f64, value: f64, p: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "{what}: expected dimension {expected}, got {got}"
        )))
    }
}
