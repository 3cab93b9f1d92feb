//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by contour construction, discretization, operator
/// assembly, and the solvers built on top of them.
#[derive(Debug, Error)]
pub enum RhError {
    /// A parameter was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An evaluation point was too close to the contour (or to a
    /// junction) for the requested operation to be reliable.
    #[error("evaluation point too close to contour: {0}")]
    Proximity(String),

    /// A discretized linear system was too ill-conditioned to trust.
    #[error("linear system ill-conditioned: estimated condition {0:.3e}")]
    IllConditioned(f64),

    /// An adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// A construction that requires analytic continuation was asked to
    /// run on data that only exists on the contour.
    #[error("analytic continuation unavailable: {0}")]
    ContinuationUnavailable(String),

    /// A structural invariant (orientation completeness, factorization
    /// consistency, perturbation gate, ...) failed a runtime check.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// Grid/operator shape mismatch.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// I/O or serialization failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, RhError>;
