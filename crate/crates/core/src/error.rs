use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("profile not certified: {0}")]
    NotCertified(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            msg: msg.into(),
        }
    }

    /// Shift the line number of a syntax error, used when a block is embedded in a larger file.
    pub fn offset_line(self, by: usize) -> Self {
        match self {
            Error::Syntax { line, msg } => Error::Syntax {
                line: line + by,
                msg,
            },
            other => other,
        }
    }
}
