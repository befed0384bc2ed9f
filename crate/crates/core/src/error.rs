use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell {cell} is degenerate or inverted (signed volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("non-manifold mesh: face {face:?} is shared by {count} cells")]
    NonManifold { face: Vec<usize>, count: usize },

    #[error("unsupported quadrature request: {0}")]
    Quadrature(String),

    #[error("singular local degree-of-freedom matrix ({element}, smallest singular value {sigma_min:e})")]
    SingularDofMatrix { element: String, sigma_min: f64 },

    #[error("metric is not positive definite ({context})")]
    NotPositiveDefinite { context: String },

    #[error("dihedral angle cosine {cos} out of range at {context}")]
    AngleOutOfRange { cos: f64, context: String },

    #[error("exact scalar curvature {exact} disagrees with computed {computed} on cell {cell}")]
    CurvatureMismatch { cell: usize, exact: f64, computed: f64 },

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
