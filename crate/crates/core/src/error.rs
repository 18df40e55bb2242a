//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by matrix algebra, gradation construction, system assembly,
/// folding and integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TodaError {
    /// Two operands have incompatible shapes.
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    /// An operation requiring a square matrix received a rectangular one.
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    /// A matrix that must be invertible is numerically singular.
    #[error("singular matrix in {0}")]
    Singular(&'static str),

    /// A structure matrix could not be built or is not invertible.
    #[error("invalid structure matrix: {0}")]
    InvalidStructure(String),

    /// A gradation specification violates one or more constraints.
    #[error("invalid gradation spec: {0}")]
    InvalidSpec(String),

    /// A Toda system could not be assembled from the supplied data.
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// Supplied data violates a constraint of the system.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// A folding pattern does not fit the requested node count.
    #[error("invalid fold: {0}")]
    InvalidFold(String),

    /// Enumeration exceeded the configured cap.
    #[error("enumeration produced more than {cap} candidates")]
    CapExceeded { cap: usize },

    /// Initial data or solver inputs are inconsistent.
    #[error("invalid initial data: {0}")]
    InvalidData(String),

    /// A scalar reduction was requested for a field that does not satisfy its
    /// precondition.
    #[error("reduction failed: {0}")]
    Reduction(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, TodaError>;
