use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("character {character:?} at offset {offset} is not in the alphabet")]
    UnknownSymbol { character: char, offset: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence too short: {0}")]
    TooShort(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated container: {0}")]
    Truncated(&'static str),

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Short machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidAlphabet(_) => "invalid_alphabet",
            Error::UnknownSymbol { .. } => "unknown_symbol",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::TooShort(_) => "too_short",
            Error::Degenerate(_) => "degenerate",
            Error::BadMagic => "bad_magic",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Truncated(_) => "truncated",
            Error::Corrupt(_) => "corrupt",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
