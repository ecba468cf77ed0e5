//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Quantum numbers are not half-integers, violate |m| <= j, or fail the
    /// triangle inequality.
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    /// A real argument lies outside the mathematical domain of the function.
    #[error("argument outside domain: {0}")]
    Domain(String),

    /// Matrix or vector sizes do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A linear solve failed because the condition estimate exceeded the
    /// singularity threshold.
    #[error("matrix numerically singular (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    /// The point constellation does not span the operator space.
    #[error("degenerate constellation: {0}")]
    DegenerateConstellation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The stereographic chart is unusable because a point sits too close to
    /// the south pole; the caller should rotate the constellation first.
    #[error("stereographic chart breakdown (max |z| = {max_abs_z:.3e})")]
    ChartBreakdown { max_abs_z: f64 },

    /// The geodesic-triangle phase has no principal value, e.g. for
    /// antipodal directions.
    #[error("undefined phase: {0}")]
    UndefinedPhase(String),
}
