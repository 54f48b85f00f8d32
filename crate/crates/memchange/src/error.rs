// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared by all modules.

use std::fmt;

/// Crate-wide result alias.
pub type McResult<T> = Result<T, McError>;

/// Errors produced by simulation, estimation and segmentation.
#[derive(Debug)]
pub enum McError {
    /// A parameter is outside its documented domain.
    InvalidInput(String),
    /// A segment whose periodogram vanishes at every used frequency;
    /// the log contrast is undefined there.
    DegenerateSegment(String),
    /// The candidate grid cannot host the requested number of breaks.
    InfeasibleK(String),
    /// Malformed or empty input data (CSV/JSON payloads).
    Data(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl McError {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        McError::InvalidInput(msg.into())
    }

    pub fn degenerate_segment(msg: impl Into<String>) -> Self {
        McError::DegenerateSegment(msg.into())
    }

    pub fn infeasible_k(msg: impl Into<String>) -> Self {
        McError::InfeasibleK(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        McError::Data(msg.into())
    }

    /// Process exit code for the CLI: 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            McError::InvalidInput(_) => 2,
            McError::Data(_) | McError::Io(_) => 3,
            McError::DegenerateSegment(_) | McError::InfeasibleK(_) => 4,
        }
    }

    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            McError::InvalidInput(_) => "invalid_input",
            McError::DegenerateSegment(_) => "degenerate_segment",
            McError::InfeasibleK(_) => "infeasible_k",
            McError::Data(_) => "data",
            McError::Io(_) => "io",
        }
    }
}

impl fmt::Display for McError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            McError::DegenerateSegment(msg) => write!(f, "degenerate segment: {msg}"),
            McError::InfeasibleK(msg) => write!(f, "infeasible segmentation: {msg}"),
            McError::Data(msg) => write!(f, "data error: {msg}"),
            McError::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for McError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            McError::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for McError {
    fn from(err: std::io::Error) -> Self {
        McError::Io(err)
    }
}
