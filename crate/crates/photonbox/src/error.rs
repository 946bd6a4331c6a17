use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("photon number {n} outside truncated basis of dimension {dim}")]
    OutOfRange { n: usize, dim: usize },

    #[error("truncation overflow: {tail:.3e} of norm pushed beyond the retained basis (limit {limit:.1e})")]
    TruncationOverflow { tail: f64, limit: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("outcome {outcome:+} is impossible here (probability {prob:.3e})")]
    ImpossibleOutcome { outcome: i32, prob: f64 },

    #[error("record incompatible with the prior: posterior normalizer underflowed")]
    DegenerateRecord,

    #[error("not enough outcomes for an estimate: got {got}, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("finite-difference step {step:.3e} outside [{min:.0e}, {max:.0e}]")]
    BadDifferenceStep { step: f64, min: f64, max: f64 },

    #[error("threshold never crossed while scanning up to t = {t_max} s")]
    NoCrossing { t_max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
