use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("empty universe: no ticker survived loading")]
    EmptyUniverse,

    #[error("insufficient data: need {needed} rows, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("edge density undefined for a graph with {0} node(s)")]
    UndefinedDensity(usize),

    #[error("index {index} out of range for {len} nodes")]
    Index { index: usize, len: usize },

    #[error("invalid penalty coefficients: need 0 < B < A, got A = {a}, B = {b}")]
    InvalidPenalty { a: f64, b: f64 },

    #[error("spin value {value} at position {index} is not +1 or -1")]
    Decode { index: usize, value: f64 },

    #[error("graph has {n_nodes} nodes, above the exact solver limit of {limit}")]
    SizeLimit { n_nodes: usize, limit: usize },

    #[error("exact search exceeded its time budget")]
    Timeout,

    #[error("no feasible solution among the candidates")]
    NoFeasibleSolution,

    #[error("numerical divergence at step {step}")]
    Divergence { step: usize },

    #[error("zero volatility for ticker {0}")]
    ZeroVolatility(String),

    #[error("missing price for {ticker} at {date}")]
    MissingPrice { ticker: String, date: String },

    #[error("accounting error: previous value {0} is not positive")]
    Accounting(f64),

    #[error("empty portfolio: no constituents to weight")]
    EmptyPortfolio,

    #[error("period {from}..{to} is outside the report range")]
    Range { from: String, to: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
