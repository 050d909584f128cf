use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate denominator at t = {t}")]
    DegenerateDenominator { t: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (last change {change:e})")]
    QuadratureNonConvergence { a: f64, b: f64, change: f64 },

    #[error("{0}")]
    Model(String),

    #[error("{0}")]
    Simulation(String),

    #[error("{path}: line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
