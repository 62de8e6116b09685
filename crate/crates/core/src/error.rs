use std::fmt;

use crate::replay::ReplayVerdict;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of an [`Error`], used for exit codes and
/// gateway event tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Validation,
    Format,
    Authentication,
    Key,
    Freshness,
    Policy,
    Protocol,
    Measurement,
    Entropy,
    Io,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatError {
    Truncated { needed: usize, actual: usize },
    TrailingBytes { expected: usize, actual: usize },
    BadMagic([u8; 2]),
    BadVersion(u8),
    BadSuite(u8),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Truncated { needed, actual } => {
                write!(f, "truncated input: need {needed} bytes, have {actual}")
            }
            FormatError::TrailingBytes { expected, actual } => {
                write!(f, "length mismatch: header implies {expected} bytes, have {actual}")
            }
            FormatError::BadMagic(m) => write!(f, "bad magic {:02x}{:02x}", m[0], m[1]),
            FormatError::BadVersion(v) => write!(f, "unsupported version {v:#04x}"),
            FormatError::BadSuite(s) => write!(f, "invalid suite byte {s:#04x}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{field} level {value} out of range (expected 0..=3)")]
    FactorOutOfRange { field: &'static str, value: i64 },

    #[error("risk score {0} out of range (expected 0.0..=3.0)")]
    ScoreOutOfRange(String),

    #[error("policy document: {0}")]
    PolicyParse(String),

    #[error("duplicate class_id {0}")]
    DuplicateClass(u8),

    #[error("class {class_id}: stored {field} {stored} disagrees with computed {computed}")]
    ScoreMismatch {
        class_id: u8,
        field: &'static str,
        stored: String,
        computed: String,
    },

    #[error("unknown message class {0}")]
    UnknownClass(u8),

    #[error("invalid {what} length: expected {expected}, got {actual}")]
    InvalidLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid suite: {0}")]
    InvalidSuite(String),

    #[error("payload of {0} bytes exceeds the {max} byte limit", max = crate::suite::MAX_PLAINTEXT)]
    Oversize(usize),

    #[error("entropy source failure: {0}")]
    Entropy(String),

    #[error("authentication failed")]
    Authentication,

    #[error("malformed envelope: {0}")]
    Format(FormatError),

    #[error("no keys for sender {sender_id} epoch {epoch}")]
    UnknownKey { sender_id: u32, epoch: u8 },

    #[error("sequence {sequence} rejected: {verdict}")]
    Freshness { sequence: u64, verdict: ReplayVerdict },

    #[error("policy violation: {0}")]
    PolicyViolation(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: String },

    #[error("no power entry for {0}")]
    MissingPower(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("key store: {0}")]
    KeyStore(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::FactorOutOfRange { .. }
            | Error::ScoreOutOfRange(_)
            | Error::PolicyParse(_)
            | Error::DuplicateClass(_)
            | Error::ScoreMismatch { .. }
            | Error::UnknownClass(_)
            | Error::InvalidLength { .. }
            | Error::InvalidSuite(_)
            | Error::Oversize(_)
            | Error::NonPositive { .. }
            | Error::MissingPower(_)
            | Error::Config(_)
            | Error::KeyStore(_) => ErrorKind::Validation,
            Error::Entropy(_) => ErrorKind::Entropy,
            Error::Authentication => ErrorKind::Authentication,
            Error::Format(_) => ErrorKind::Format,
            Error::UnknownKey { .. } => ErrorKind::Key,
            Error::Freshness { .. } => ErrorKind::Freshness,
            Error::PolicyViolation(_) => ErrorKind::Policy,
            Error::Protocol(_) => ErrorKind::Protocol,
            Error::Measurement(_) => ErrorKind::Measurement,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

impl From<FormatError> for Error {
    fn from(e: FormatError) -> Self {
        Error::Format(e)
    }
}
