use thiserror::Error;

/// Errors raised by the numeric pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable index {index} out of range for {dim} variables")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
    #[error("jet order {0} not supported (maximum is 4)")]
    UnsupportedOrder(usize),
    #[error("jets of dimension {left} and {right} cannot be combined")]
    DimensionMismatch { left: usize, right: usize },
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("metric is not positive definite at the point (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMetric { min_eigenvalue: f64 },
    #[error("{what} needs jet order {needed}, only {available} available")]
    OrderExhausted {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("dimension {dim} too small: {what} requires n >= {min}")]
    DimensionTooSmall {
        what: &'static str,
        dim: usize,
        min: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("symmetry violated: {0}")]
    Symmetry(String),
    #[error("spectrum of w is near a rank boundary (gap ratio {ratio:e})")]
    NearRankBoundary { ratio: f64 },
    #[error("kernel of w does not annihilate W (max |W(v,.,.,.)| = {residual:e})")]
    IsomorphismViolation { residual: f64 },
    #[error("quantity unavailable: {0}")]
    Unavailable(String),
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("{0}")]
    Parse(#[from] crate::dsl::ParseError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
