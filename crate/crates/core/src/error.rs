//! Error types shared by the library.

use thiserror::Error;

/// A located parse or semantic error in mini-language source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {code}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    /// Stable machine-readable category, e.g. `syntax`, `undeclared`, `domain`.
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("algorithm `{name}` does not support {threads} threads")]
    UnsupportedThreads { name: String, threads: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
}
