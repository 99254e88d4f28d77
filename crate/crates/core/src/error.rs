use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("instance too large to enumerate: K={k}, M={m} (limit K<={max_k}, M<={max_m})")]
    OracleTooLarge { k: u64, m: u64, max_k: u64, max_m: u64 },

    #[error("value {value} exceeds field maximum {max}")]
    FieldOverflow { value: u64, max: u64 },

    #[error("bit length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("padding bits after the message must be zero")]
    NonZeroPadding,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed preamble pool: {0}")]
    PoolFormat(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
