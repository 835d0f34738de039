use std::io;

/// Error type shared by the whole library.
///
/// The variants mirror the failure classes of the public operations: data
/// and format problems (`Format`, `Unsupported`, `Truncation`, `Shape`,
/// `Domain`), configuration and resource-cap problems (`Config`, `Cap`,
/// `Degenerate`, `EmptyBatch`) and plain I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("truncated input: {0}")]
    Truncation(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty sample batch")]
    EmptyBatch,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for data/format problems,
    /// 3 for configuration and cap problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_)
            | Error::Unsupported(_)
            | Error::Truncation(_)
            | Error::Shape(_)
            | Error::Domain(_)
            | Error::EmptyBatch
            | Error::Io(_) => 2,
            Error::Config(_) | Error::Cap(_) | Error::Degenerate(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
