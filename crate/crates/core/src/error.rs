//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the Hodge, torus, solver and period layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Hodge numbers empty or all zero.
    #[error("invalid Hodge type: {0}")]
    InvalidHodgeType(String),

    /// Matrix or form dimensions do not match.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A frame fails a structural precondition (invertibility,
    /// decomposition-adaptedness, conjugate symmetry).
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    /// A leading principal block stack is singular; the point lies outside
    /// the unipotent orbit. Carries the offending block index.
    #[error("not in unipotent orbit: leading block stack 0..={block} is singular")]
    NotInOrbit { block: usize },

    /// A form degree is outside the representable range.
    #[error("degree error: {0}")]
    DegreeError(String),

    /// Geometry data is inconsistent (Im τ not positive definite, metric
    /// not Hermitian positive definite, ...).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The Beltrami field has supremum operator norm ≥ 1.
    #[error("contraction violation: supremum operator norm {norm} ≥ 1")]
    ContractionViolation { norm: f64 },

    /// The fixed-point iteration did not reach the tolerance.
    #[error("no convergence after {iterations} iterations (last residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The extension problem violates a constructor invariant.
    #[error("invalid extension problem: {0}")]
    InvalidProblem(String),

    /// The exact period oracle only supports constant-coefficient families.
    #[error("unsupported oracle input: {0}")]
    UnsupportedOracle(String),

    /// A finite-difference step leaves the certified admissible radius.
    #[error("step outside admissible radius: {0}")]
    StepOutsideRadius(String),

    /// Malformed serialized form data.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
