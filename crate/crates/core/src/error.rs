use thiserror::Error;

/// Errors raised by body construction, geometric operations and the pipelines built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("origin is not an interior point of the body (margin {margin:.3e})")]
    NotInterior { margin: f64 },
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("body is not origin-symmetric")]
    NotSymmetric,
    #[error("inner body is not contained in the outer body (gauge ratio {ratio:.6})")]
    NotNested { ratio: f64 },
    #[error("sample lies inside the body but outside the reference body")]
    ContainmentViolated,
    #[error("linear map is singular")]
    Singular,
    #[error("section is empty or lower-dimensional for every probed shift")]
    DegenerateSection,
    #[error("iteration stalled: {0}")]
    Stall(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("linear program is {0}")]
    Lp(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("certificate `{name}` failed: value {value:.6e} exceeds bound {bound:.6e}")]
    CertificateFailed { name: String, value: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
