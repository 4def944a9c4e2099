use thiserror::Error;

/// Errors surfaced by the mask-coding library.
#[derive(Debug, Error)]
pub enum Error {
    /// Sizes or lengths that must agree do not (mask sizes, vector lengths,
    /// zigzag truncation bounds).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A parameter combination that is rejected up front, e.g. a patch size
    /// that does not divide the mask size.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A patch-class contract violation: encoding a non-mixed patch, or a
    /// class/vector mismatch when decoding.
    #[error("patch class error: {0}")]
    PatchClass(String),

    /// A value that must be finite or within range is not.
    #[error("invalid value: {0}")]
    Invalid(String),

    /// An operation that requires at least one element got none.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// A document (PBM, JSON) could not be parsed. Line and column are
    /// 1-based; column 0 means "unknown".
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
