use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid alignment: {0}")]
    InvalidAlignment(String),

    #[error("invalid structure: pair ({i}, {j}) violates {criterion}")]
    InvalidStructure {
        i: usize,
        j: usize,
        criterion: &'static str,
    },

    #[error("consensus is empty: every column is gap-dominated")]
    DegenerateConsensus,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("inputs do not correspond: {0}")]
    Mismatch(String),

    #[error("report consistency: {0}")]
    Consistency(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
