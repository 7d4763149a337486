//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by the numerical kernels, the uncertainty geometry and
/// the sweep engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("frequency {omega} rad/s coincides with a pole of the plant")]
    FrequencyAtPole { omega: f64 },

    #[error("eigenvalue iteration did not converge for a {size}x{size} matrix")]
    EigenNonConvergence { size: usize },

    #[error("degenerate box: every edge has zero width")]
    DegenerateBox,

    #[error("vertex enumeration needs 2^{n} corners, limit is 2^{limit}")]
    VertexCapacity { n: usize, limit: usize },

    #[error("the box oracle supports exactly 2 uncertainty parameters, got {n}")]
    OracleCapacity { n: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
