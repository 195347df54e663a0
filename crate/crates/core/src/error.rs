use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operands belong to different gate engines")]
    EngineMismatch,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("service value {value} does not fit in {bits} bits")]
    ServiceOverflow { value: u64, bits: usize },

    #[error("zero-sample sheet entry ({region}, {bit}) was already consumed")]
    SheetConsumed { region: usize, bit: usize },

    #[error("dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    #[error("malformed encoding: {0}")]
    Malformed(String),

    #[error("server replied with error {code}: {message}")]
    Remote { code: u8, message: String },

    #[error("unexpected {0} frame")]
    UnexpectedFrame(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
