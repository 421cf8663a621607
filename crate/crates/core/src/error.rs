use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic at byte {offset}: expected \"SEMB\" or a JSONL header")]
    BadMagic { offset: u64 },

    #[error("unsupported stream version {version} at byte {offset}")]
    UnsupportedVersion { version: u32, offset: u64 },

    #[error("truncated {what} at byte {offset}")]
    Truncated { what: &'static str, offset: u64 },

    #[error("record count mismatch at byte {offset}: header declares {expected}, found {found}")]
    CountMismatch { expected: u64, found: u64, offset: u64 },

    #[error("malformed {what} at byte {offset}: {message}")]
    Malformed {
        what: &'static str,
        offset: u64,
        message: String,
    },

    #[error("invalid record at byte {offset}: {source}")]
    InvalidRecord {
        offset: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("word type mismatch: {0:?} vs {1:?}")]
    WordTypeMismatch(String, String),

    #[error("mean direction is undefined for a zero mean vector")]
    UndefinedDirection,

    #[error("word {word:?} does not occur in corpus {corpus:?}")]
    WordNotFound { word: String, corpus: String },

    #[error("word {word:?} occurs {count} times in corpus {corpus:?}; more than {min_freq} required")]
    BelowThreshold {
        word: String,
        corpus: String,
        count: u64,
        min_freq: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors raised while decoding an embedding stream.
    pub fn is_decode(&self) -> bool {
        matches!(
            self,
            Error::BadMagic { .. }
                | Error::UnsupportedVersion { .. }
                | Error::Truncated { .. }
                | Error::CountMismatch { .. }
                | Error::Malformed { .. }
                | Error::InvalidRecord { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
