use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semi-definite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subspaces are not skew-compatible: {0}")]
    SkewViolation(String),

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("invalid tolerance context: {0}")]
    InvalidTolerance(String),

    #[error("invalid inconclusive operator: {0}")]
    InvalidInconclusive(String),

    #[error("operator cannot be reconstructed from its core: {0}")]
    NotReconstructible(String),

    #[error("reduction record is incompatible with the measurement: {0}")]
    IncompatibleRecord(String),

    #[error("measurement is not proper for the pair")]
    NotProper,

    #[error("certificate construction failed: {0}")]
    CertificateFailure(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("degenerate candidate family: {0}")]
    DegenerateFamily(String),

    #[error("no optimal measurement found: {0}")]
    NoSolutionFound(String),

    #[error("oracle did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
