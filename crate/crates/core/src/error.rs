//! Error type shared across the toolkit.

use thiserror::Error;

/// Failure modes of simulation, estimation and reporting.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration parameter violates its documented range.
    #[error("parameter `{name}` = {value} violates constraint: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Input data contains a value outside the admissible domain
    /// (non-positive price, non-finite level, non-monotone timestamps).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally malformed input (bad CSV shape, wrong header, bad UTF-8).
    #[error("format error: {0}")]
    Format(String),

    /// Too little data, or an index outside the series.
    #[error("size error: {0}")]
    Size(String),

    /// A regression or factorization degenerated (zero-variance regressor,
    /// non-positive-definite covariance).
    #[error("singularity: {0}")]
    Singular(String),

    /// A computation left the valid numeric region at runtime.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Every optimizer start failed; carries the best point seen anyway.
    #[error("optimization failed: {message} (best loss {best_loss})")]
    Optimization {
        message: String,
        best: Vec<f64>,
        best_loss: f64,
    },

    /// Request exceeds a configured resource ceiling.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An operation was invoked with the wrong kind of argument.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
