//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical kernels and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bernoulli index {0} out of range (must be <= 64)")]
    BernoulliOutOfRange(u32),

    #[error("invalid asymptotic model: {0}")]
    InvalidModel(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("regularized-integral hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("operator not invertible: {0}")]
    NonInvertible(String),

    #[error("zero mode detected (eigenvalue {0:.3e} within tolerance of 0)")]
    ZeroMode(f64),

    #[error("ODE solver failed: {0}")]
    OdeFailure(String),

    #[error("root finder failed: {0}")]
    RootFindFailure(String),

    #[error("potential must be positive: min V = {0:.6e}")]
    NonPositivePotential(f64),

    #[error("profile must be positive: min r = {0:.6e}")]
    NonPositiveProfile(f64),

    #[error("kernel pole: mu*sin(theta) = cos(theta) at mu = {0}")]
    KernelPole(f64),

    #[error("zeta continuation evaluated at a pole: s = {0}")]
    ZetaPole(f64),

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: f64, got: f64 },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
