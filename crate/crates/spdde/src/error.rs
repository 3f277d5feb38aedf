//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be a positive integer")]
    InvalidDimension,

    #[error("time must be non-negative, got {0}")]
    InvalidTime(f64),

    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),

    #[error("invalid parameter `{name}`: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("sample count must be positive")]
    InvalidSampleCount,

    #[error("signal generation failed: {0}")]
    Generation(String),

    #[error("infeasible Halanay coefficients: a1 + a2 = {0} must be negative")]
    Infeasible(f64),

    #[error("comparison system left its maximal interval at t = {last_valid}")]
    MaximalInterval { last_valid: f64 },

    #[error("envelope fit failed: {0}")]
    Fit(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
