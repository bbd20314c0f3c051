use thiserror::Error;

/// Errors raised while building scenarios or evaluating the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("relative delay {tau} falls outside the observation window (allowed 0..={max})")]
    DelayOutOfWindow { tau: i64, max: usize },

    #[error("receive filter is identically zero")]
    ZeroFilter,

    #[error("target response is zero, receive filter is undefined")]
    ZeroTargetResponse,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
