use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate chart Jacobian at element {element} ({s}, {t})")]
    Geometry { element: usize, s: f64, t: f64 },

    #[error("matrix is singular to working precision (pivot magnitude {pivot:e} at step {step})")]
    SingularMatrix { pivot: f64, step: usize },

    #[error("matrix is not positive semidefinite (pivot {pivot:e} at step {step})")]
    NotPositiveSemidefinite { pivot: f64, step: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point {index} lies inside the scatterer (|x| = {norm}, radius {radius})")]
    PointInside { index: usize, norm: f64, radius: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operator cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
