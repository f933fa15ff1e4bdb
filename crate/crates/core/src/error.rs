use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("elements belong to different algebras ({left} vs {right})")]
    AlgebraMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("work estimate {needed} exceeds budget {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("input is not in the maximal tensor product; violated for sign vector {sign:?}")]
    MaxMembershipViolated { sign: Vec<i8> },

    #[error("symmetry precondition violated (residual {residual:e})")]
    SymmetryViolated { residual: f64 },

    #[error("spectral radius is a degenerate eigenvalue; spectrum {eigenvalues:?}")]
    DegenerateSpectralRadius { eigenvalues: Vec<f64> },

    #[error("expected a positive semidefinite element, minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid spin system: {0}")]
    InvalidSpinSystem(String),

    #[error("map does not send the cone into the interior (margin {margin:e})")]
    InteriorityViolated { margin: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
