use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// The propulsion model divides by the airspeed magnitude.
    #[error("propulsion power undefined at zero airspeed (slot {slot})")]
    ZeroAirspeed { slot: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The throughput demands cannot be met from the supplied starting point.
    #[error(
        "problem infeasible: {reason} (achievable demand fraction {achievable_fraction:.6})"
    )]
    Infeasible {
        reason: String,
        /// Largest uniform scaling of the demand vector the starting point supports.
        achievable_fraction: f64,
    },

    #[error("pattern infeasible: {0}")]
    PatternInfeasible(String),

    #[error("convex solver failure: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table {path}: {message}")]
    Table { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
