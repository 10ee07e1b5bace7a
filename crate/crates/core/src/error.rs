use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument was outside its valid domain.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// An edge arrived with a tick smaller than the stream's current tick.
    #[error("stream order violation at line {line}: tick {tick} follows tick {previous}")]
    StreamOrder { line: u64, previous: u64, tick: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn eval(msg: impl Into<String>) -> Self {
        Error::Eval(msg.into())
    }

    /// True for errors caused by the data itself (as opposed to I/O or
    /// configuration).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::StreamOrder { .. } | Error::Parse { .. } | Error::Eval(_)
        )
    }
}
