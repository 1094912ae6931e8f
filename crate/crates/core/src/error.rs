use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("kernel singular at t = {0}")]
    KernelDomain(f64),

    #[error("operation requires a riemann_liouville kernel, got {0}")]
    KernelFamily(&'static str),

    #[error("derivative unavailable for {family} at v = {v}")]
    DerivativeUnavailable { family: &'static str, v: f64 },

    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("degenerate denominator: f vanishes on every midpoint")]
    DegenerateDenominator,

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("non-finite state: {0}")]
    BlowUp(String),

    #[error("estimator rejected: {excluded} of {total} paths excluded")]
    TooManyExcluded { excluded: usize, total: usize },

    #[error("implied volatility inversion failed: {0}")]
    Inversion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
