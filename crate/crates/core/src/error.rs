use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid fitness specification: {0}")]
    InvalidFitness(String),

    #[error("invalid seed graph: {0}")]
    InvalidSeed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {value} with error {achieved:e} (requested {requested:e})")]
    Quadrature {
        value: f64,
        achieved: f64,
        requested: f64,
    },

    /// A regime-dependent quantity was requested outside the regime where it exists.
    #[error("regime error: {0}")]
    Regime(String),

    /// The generalized binomial or c-sequence was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration guard exceeded: {outcomes} outcomes (limit {limit})")]
    EnumerationGuard { outcomes: u128, limit: u128 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
