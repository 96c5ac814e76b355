use thiserror::Error;

/// Everything that can go wrong across the pipeline, from input validation
/// through the Newton solver. Variants carry enough context to tell the user
/// which entry, column, or block misbehaved.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("entry {index} is {value}; parts must be strictly positive and finite")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("parts must sum to one, got {sum}")]
    NotClosed { sum: f64 },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("coordinate magnitude {0} saturates exp; refusing to build a composition from it")]
    Overflow(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("samples live on different grids: {0}")]
    GridMismatch(String),

    #[error("non-finite value: {0}")]
    NonFiniteValue(String),

    #[error("covariance spectrum is numerically zero; no principal components to extract")]
    DegenerateData,

    #[error("response is degenerate: every observation is class {0}")]
    DegenerateResponse(u8),

    #[error("quasi-complete separation: |{label}| exceeded {limit} with no ridge")]
    SeparationDetected { label: String, limit: f64 },

    #[error("weighted normal matrix is not positive definite")]
    SingularHessian,

    #[error("column {label} has zero variance; the block is not identifiable")]
    ZeroVarianceColumn { label: String },

    #[error("zero variance in correlation input: {0}")]
    ZeroVariance(String),

    #[error("{failed} of {total} replicates failed, above the exclusion budget")]
    TooManyFailures { failed: usize, total: usize },

    #[error("model deserialization failed: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
