use thiserror::Error;

/// Errors raised by the interpolation, calibration and metric routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gram matrix is numerically singular (condition estimate {condition:.3e})")]
    SingularGram { condition: f64 },

    #[error("negative posterior variance {variance:.3e} at a non-design point")]
    NegativeVariance { variance: f64 },

    #[error("test point coincides with design point {index}")]
    AtDesignPoint { index: usize },

    #[error("probability {0} outside the open unit interval")]
    InvalidProbability(f64),

    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("shape parameter {beta} outside tabulated range [{lo}, {hi}]")]
    OutsideTable { beta: f64, lo: f64, hi: f64 },

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("point outside the domain of `{0}`")]
    OutOfDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
