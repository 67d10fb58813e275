use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("graph contains a non-directed edge {0} - {1}")]
    NotDirected(String, String),

    #[error("graph contains an edge that is neither directed nor undirected: {0} - {1}")]
    NotPdag(String, String),

    #[error("orientation rules force both directions of {0} - {1}")]
    Inconsistent(String, String),

    #[error("graph admits no consistent DAG extension")]
    NoExtension,

    #[error("graph has a directed cycle")]
    Cyclic,

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),

    #[error("self-loop on {0:?}")]
    SelfLoop(String),

    #[error("node sets differ between graphs")]
    NodeMismatch,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("row {row} has {found} fields, header has {expected}")]
    RowLength {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("column {column:?} has {arity} states (allowed 2..=32)")]
    Arity { column: String, arity: usize },

    #[error("cannot form {bins} bins from {distinct} distinct values")]
    TooFewDistinct { bins: usize, distinct: usize },

    #[error("dataset has missing values; {0} requires complete data")]
    MissingData(&'static str),

    #[error("datasets do not share variable definitions")]
    VariableMismatch,

    #[error("free parameter count overflows")]
    Overflow,

    #[error("conditional probability table for {0:?} is too large ({1} entries)")]
    CptTooLarge(String, u128),

    #[error("evidence has zero probability: {0}")]
    ImpossibleEvidence(String),

    #[error("DDM undefined: reference graph has no arcs")]
    NoReferenceArcs,

    #[error("no rows were scored")]
    NothingScored,

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
