//! Error type shared across the crate.

use std::fmt;

/// Errors produced by simulation and codec operations.
#[derive(Debug)]
pub enum Error {
    /// An argument violated a documented precondition.
    Domain(String),
    /// A numeric computation failed (singular system, non-PD matrix, ...).
    Numeric(String),
    /// Codec-level failure: non-finite input, out-of-range index.
    Codec(String),
    /// Malformed bitstream container.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Codec(msg) => write!(f, "codec error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
