use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability must lie strictly between 0 and 1, got {0}")]
    InvalidProbability(f64),

    #[error("length must be at least {min}, got {got}")]
    InvalidLength { min: usize, got: usize },

    #[error("invalid symbol {ch:?} at position {pos}")]
    ParseSymbol { ch: char, pos: usize },

    #[error("malformed binary sequence data: {0}")]
    Decode(String),

    #[error("substitution matrix has no score for the pair ({0}, {1})")]
    UncoveredLetter(char, char),

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: String,
    },

    #[error("illegal insertion position {pos} for a string of length {len} in {mode} mode")]
    IllegalInsertion {
        pos: usize,
        len: usize,
        mode: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed history: {0}")]
    History(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
