use alloc::string::String;
use thiserror::Error;

/// Errors raised by the core environment, oracle and learner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid reputation bounds: phi_min={phi_min} must be < phi_max={phi_max} and K={k} must be >= 2")]
    InvalidBounds { phi_min: f64, phi_max: f64, k: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quality {quality} is below the threshold {threshold}")]
    QualityBelowThreshold { quality: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid expert selection: m={m} with M={experts}")]
    InvalidSelection { m: usize, experts: usize },

    #[error("rollout buffer is empty")]
    EmptyBuffer,

    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),

    #[error("empty content descriptor")]
    EmptyDescriptor,

    #[error("unparseable evaluator response: {0:?}")]
    UnparseableResponse(String),

    #[error("rating {value} outside scale [{min}, {max}]")]
    OutOfScale { value: f64, min: f64, max: f64 },

    #[error("grid search over K={k} types would evaluate too many menus (limit K <= 3)")]
    CombinatorialBlowup { k: usize },

    #[error("division by zero: f * phi_k is zero for type {0}")]
    ZeroDivisor(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
