use thiserror::Error;

use crate::linkage::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown word `{word}` at position {position}")]
    UnknownWord { word: String, position: usize },

    #[error("sentence has {len} tokens, the limit is {max}")]
    TooLong { len: usize, max: usize },

    #[error("empty sentence")]
    EmptySentence,

    #[error("no table for ({term}, {connector})")]
    MissingTable { term: String, connector: String },

    #[error("table for ({term}, {connector}) sums to {sum}")]
    NotNormalized {
        term: String,
        connector: String,
        sum: f64,
    },

    #[error("invalid table for ({term}, {connector}): {reason}")]
    InvalidTable {
        term: String,
        connector: String,
        reason: String,
    },

    #[error("({term}, {connector}) never observed and alpha is 0")]
    UnseenKey { term: String, connector: String },

    #[error("smoothing parameter must be non-negative, got {0}")]
    NegativeAlpha(f64),

    #[error("zero-probability event: {0}")]
    ZeroProbability(String),

    #[error("invalid linkage: {}", format_violations(.0))]
    InvalidLinkage(Vec<Violation>),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error(
        "power iteration did not converge after {iterations} iterations (best estimate {estimate})"
    )]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no connected structure: {0}")]
    NoStructure(String),

    #[error("length mismatch: parsed has {parsed} tokens, gold has {gold}")]
    LengthMismatch { parsed: usize, gold: usize },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
