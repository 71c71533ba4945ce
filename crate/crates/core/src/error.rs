use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading data or evaluating measures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid identifier {0:?}: identifiers must be non-empty and contain no whitespace")]
    InvalidId(String),

    #[error("duplicate document {doc} in ranked list for query {query}")]
    DuplicateDoc { query: String, doc: String },

    #[error("duplicate judgment for query {query}, document {doc}")]
    DuplicateJudgment { query: String, doc: String },

    #[error("document {doc} is mapped to both {first} and {second}")]
    ConflictingLanguage {
        doc: String,
        first: String,
        second: String,
    },

    #[error("document {0} has no language in the language map")]
    MissingLanguage(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: negative relevance grade {grade}")]
    NegativeGrade {
        path: PathBuf,
        line: usize,
        grade: i64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid measure {spec:?}: {message}")]
    Measure { spec: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no queries to evaluate: {0}")]
    EmptyQuerySet(String),

    #[error("{measure} on query {query}: {source}")]
    InQuery {
        measure: String,
        query: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_query(self, measure: &str, query: &str) -> Self {
        Error::InQuery {
            measure: measure.to_string(),
            query: query.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line tool: 1 for usage and
    /// configuration errors, 2 for bad input data, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Measure { .. } | Error::Config(_) => 1,
            Error::Stats(_) => 3,
            Error::InQuery { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
