use thiserror::Error;

pub type Result<T> = std::result::Result<T, ApmError>;

#[derive(Debug, Error)]
pub enum ApmError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    EigenNoConvergence { iterations: usize, estimate: f64 },

    #[error("integrand is not finite at quadrature node {node} (point {point})")]
    NonFiniteIntegrand { node: usize, point: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("MAP solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    MapNoConvergence { iterations: usize, grad_norm: f64 },

    #[error("variational EM did not converge after {iterations} iterations (relative change {rel_change:e})")]
    VariationalNoConvergence { iterations: usize, rel_change: f64 },

    #[error("label column has {} classes, expected 2: {}", .0.len(), .0.join(", "))]
    TooManyClasses(Vec<String>),

    #[error("unknown policy '{0}'")]
    UnknownPolicy(String),

    #[error("unknown synthetic dataset '{0}' (expected clouds, cross or horseshoe)")]
    UnknownDataset(String),

    #[error("pool exhausted: {needed} selections requested but only {available} examples available")]
    PoolExhausted { needed: usize, available: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ApmError {
    pub(crate) fn invalid_arg(msg: impl Into<String>) -> Self {
        ApmError::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_data(msg: impl Into<String>) -> Self {
        ApmError::InvalidData(msg.into())
    }
}
