use thiserror::Error;

/// Errors raised across the library.
///
/// The variants mirror the CLI exit-code contract: `Usage` maps to exit
/// code 2, everything else raised during a run maps to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// An input is outside the mathematical domain of the operation
    /// (e.g. expanding n = 0, p <= 0, a family that cannot produce
    /// unbounded digit spread).
    #[error("domain error: {0}")]
    Domain(String),

    /// An index or resolution exceeds what the configured radix sequence
    /// (or the cell budget) can represent.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Mismatched arguments: different radices, different resolutions,
    /// unknown suite names, malformed flags.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
