use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("antenna counts must be positive, got ({0}, {1}, {2}, {3})")]
    InvalidAntennaCount(i64, i64, i64, i64),
    #[error("user index {0} out of range (expected 1..=3)")]
    InvalidUser(usize),
    #[error("channel realization is already symbol-extended")]
    AlreadyExtended,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("invalid power grid: {0}")]
    InvalidGrid(String),
    #[error("invalid power configuration: {0}")]
    InvalidPower(String),
}

pub type Result<T> = std::result::Result<T, Error>;
