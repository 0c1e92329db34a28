//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix is not symmetric: max |M[i][j] - M[j][i]| = {max_dev:.3e} exceeds {tol:.3e}")]
    NotSymmetric { max_dev: f64, tol: f64 },

    #[error("matrix is indefinite beyond tolerance: min eigenvalue {min_eig:.3e} < -{bound:.3e}")]
    Indefinite { min_eig: f64, bound: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigensolver failed to converge after {0} iterations")]
    NonConvergence(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training diverged at step {step}: loss {loss:.6e} vs initial {initial:.6e}")]
    Diverged {
        step: usize,
        loss: f64,
        initial: f64,
        /// Recorded (step, loss) pairs up to the point of divergence.
        trace: Vec<(usize, f64)>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
