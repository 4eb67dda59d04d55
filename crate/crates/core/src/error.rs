use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One problem found while validating a run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted path of the offending key, e.g. `jobs[0].response.order`.
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input is not valid UTF-8 near line {line}")]
    Utf8 { line: usize },

    #[error("token id {id} is not in sentence {sent_id}")]
    InvalidTokenId { sent_id: String, id: u32 },

    #[error("empty scope: no dependency matches the scope pattern")]
    EmptyScope,

    #[error("no contrastive signal: every instance in scope has the same label")]
    NoContrastiveSignal,

    #[error("cannot build a feature space from an empty instance list")]
    NoInstances,

    #[error("degenerate scope distribution: base rate {mu} is 0 or 1")]
    DegenerateBase { mu: f64 },

    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),

    #[error("zero denominator: {0} is 0")]
    ZeroDenominator(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure in solver: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("failed to serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Process exit code for the CLI. Each failure class gets its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Io { .. } | Error::Utf8 { .. } => 3,
            Error::EmptyScope | Error::NoInstances => 4,
            Error::NoContrastiveSignal | Error::DegenerateBase { .. } => 5,
            Error::Numerical(_) => 6,
            _ => 1,
        }
    }
}
