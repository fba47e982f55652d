use std::io;

use thiserror::Error;

/// Errors produced by the selection engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad magic: expected \"DTLR\", found {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported version: {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("zero matrix: singular value spectrum is all zero")]
    ZeroMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown sample id {0}")]
    UnknownId(u64),

    #[error("empty subset")]
    EmptySubset,

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Short, stable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BadMagic(_) => "bad magic",
            Error::UnsupportedVersion(_) => "unsupported version",
            Error::Truncated(_) => "truncated payload",
            Error::DimensionMismatch(_) => "dimension mismatch",
            Error::Corrupt(_) => "corrupt container",
            Error::InvalidDataset(_) => "invalid dataset",
            Error::NonFinite(_) => "non-finite input",
            Error::ZeroMatrix => "zero matrix",
            Error::InvalidArgument(_) => "invalid argument",
            Error::UnknownId(_) => "unknown id",
            Error::EmptySubset => "empty subset",
            Error::DataQuality(_) => "data quality",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
