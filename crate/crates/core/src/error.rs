//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("no valid records in {path} ({rejected} rejected)")]
    EmptyCorpus { path: PathBuf, rejected: usize },

    #[error("unknown field name {0:?} (expected title, keywords, abstract, journal or addresses)")]
    UnknownField(String),

    #[error("field set is empty")]
    EmptyFieldSet,

    #[error("publication {id}: missing pretagged terms for field {field}")]
    MissingPretagged { id: String, field: &'static str },

    #[error("class {0} appears more than once in the class file")]
    DuplicateClass(String),

    #[error("class {class}: parent {parent} is not declared")]
    UnknownParent { class: String, parent: String },

    #[error("cycle detected in class hierarchy involving {0}")]
    HierarchyCycle(String),

    #[error("classes {a} and {b} at level {level} share publication {publication}")]
    DisjointnessViolation {
        a: String,
        b: String,
        level: u32,
        publication: String,
    },

    #[error("unknown class {0}")]
    UnknownClass(String),

    #[error("{count} publication ids in assignments are missing from the corpus (first: {first})")]
    MissingMembers { count: usize, first: String },

    #[error("malformed lexicon line {line}: {message}")]
    Lexicon { line: u64, message: String },

    #[error("invalid index file: {0}")]
    IndexFormat(String),

    #[error("index does not cover class {0}; rebuild it from the same hierarchy")]
    IndexMismatch(String),

    #[error("{0}")]
    InvalidParameter(String),
}
