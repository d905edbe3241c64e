use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("affine constraint has no solution (residual {residual:e})")]
    InfeasibleConstraint { residual: f64 },

    #[error("strategy does not apply: {0}")]
    StrategyMismatch(String),

    #[error("grid search exhausted its region with a decreasing residual; outcome inconclusive")]
    UnboundedSearch,

    #[error("metric has rank zero")]
    ZeroMetric,

    #[error("reference point is not fixed (residual {residual:e})")]
    NotAFixedPoint { residual: f64 },

    #[error("supplied point is not a zero of the operator (residual {residual:e})")]
    NotAZero { residual: f64 },

    #[error("inverse of the operator is not available in closed form")]
    InverseUnavailable,

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("kernel set is not known for this operator")]
    KernelSetUnknown,

    #[error("sampler rejected {rejected} of {attempted} draws")]
    SamplerStarved { rejected: usize, attempted: usize },

    #[error("linear map is rank deficient")]
    RankDeficient,

    #[error("inner solver did not reach tolerance (residual {residual:e})")]
    InnerSolverStalled { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
