use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported dimension {got}: {what} requires n = {need}")]
    UnsupportedDimension {
        what: &'static str,
        got: u32,
        need: u32,
    },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("grid parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
