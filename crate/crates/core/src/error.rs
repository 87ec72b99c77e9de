use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measure geometry cannot be aligned to the mesh: {0}")]
    Snap(String),

    #[error("evaluation failed at ({x}, {y}): {reason}")]
    Eval { x: f64, y: f64, reason: String },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge within {max_iter} iterations (worst residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("kernel is singular at coincident points ({x}, {y})")]
    SingularKernel { x: f64, y: f64 },

    #[error("integral-operator route does not support this measure: {0}")]
    UnsupportedMeasure(String),

    #[error("degenerate vector: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
