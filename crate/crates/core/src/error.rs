use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The input is well-formed but carries too little information for the
    /// requested operation (e.g. covariance of a single sample).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("eigen-decomposition did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    /// Full repair left toxicity unchanged, so repair proximity is undefined.
    #[error("undefined baseline: vanilla and full-repair toxicity are equal ({0})")]
    UndefinedBaseline(f64),

    #[error("format error at byte offset {offset}: {message}")]
    FormatAt { offset: u64, message: String },

    #[error("format error at line {line}: {message}")]
    FormatLine { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::InvalidInput(_)
            | Error::FormatAt { .. }
            | Error::FormatLine { .. }
            | Error::Io(_)
            | Error::Json(_) => 3,
            Error::DegenerateInput(_) | Error::ConvergenceFailure { .. } | Error::UndefinedBaseline(_) => 4,
        }
    }
}
