//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this kind of Hilbert space.
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    /// Array shapes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Fock truncation keeps too little of the thermal distribution.
    #[error("truncation overflow: tail mass {tail:.3e} exceeds {tol:.1e}; need dim >= {required_dim}")]
    TruncationOverflow {
        tail: f64,
        tol: f64,
        required_dim: usize,
    },

    /// A matrix failed the density-matrix invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The explicit integrator could not make progress.
    #[error("stiffness: {0}; use the exponential propagator")]
    Stiffness(String),

    /// Integrated state drifted further than the repair tolerance.
    #[error("integrator accuracy: {0}")]
    IntegratorAccuracy(String),

    /// More than one (numerically) zero eigenvalue.
    #[error("degenerate stationary state: {count} eigenvalues with |lambda| < {tol:.1e}")]
    Degeneracy { count: usize, tol: f64 },

    /// The generator is not diagonalizable to working precision.
    #[error("non-diagonalizable generator: {0}")]
    NonDiagonalizable(String),

    /// A state expected to be positive semidefinite has a negative eigenvalue.
    #[error("numerical PSD violation: eigenvalue {0:.3e}")]
    NumericalPsd(f64),

    /// Cumulative quadrature did not converge under grid doubling.
    #[error("quadrature accuracy: relative change {change:.3e}; try at least {suggested_points} output points")]
    QuadratureAccuracy {
        change: f64,
        suggested_points: usize,
    },

    /// The equidistance condition has no root in the search bracket.
    #[error("no equidistant state: {0}")]
    NoEquidistantState(String),

    /// Least-squares fit could not be formed.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Dense work exceeds the configured resource limit.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Failure reported by the LAPACK backend.
    #[error("linear algebra backend: {0}")]
    Linalg(String),
}

impl Error {
    /// Stable identifier used by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::UnsupportedSpace(_) => "UnsupportedSpace",
            Error::Shape(_) => "ShapeError",
            Error::TruncationOverflow { .. } => "TruncationOverflow",
            Error::InvalidState(_) => "InvalidState",
            Error::Stiffness(_) => "StiffnessError",
            Error::IntegratorAccuracy(_) => "IntegratorAccuracyError",
            Error::Degeneracy { .. } => "DegeneracyError",
            Error::NonDiagonalizable(_) => "NonDiagonalizableError",
            Error::NumericalPsd(_) => "NumericalPSDError",
            Error::QuadratureAccuracy { .. } => "QuadratureAccuracyError",
            Error::NoEquidistantState(_) => "NoEquidistantState",
            Error::FitFailure(_) => "FitFailure",
            Error::ResourceLimit(_) => "ResourceLimit",
            Error::Linalg(_) => "LinalgError",
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
