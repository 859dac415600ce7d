//! Crate-wide error type.
//!
//! Errors are grouped into the categories the CLI maps onto exit codes:
//! configuration problems (2), data problems (3), and numeric failures (4).

use thiserror::Error;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad parameter values, unknown config keys,
    /// inconsistent options.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or inconsistent input data: malformed files, shape
    /// mismatches, contract violations on inputs.
    #[error("data error: {0}")]
    Data(String),

    /// Numeric failure: non-finite values produced during computation.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Exit code for the CLI: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
