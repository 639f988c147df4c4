use std::path::PathBuf;

use thiserror::Error;

use crate::problems::ParamVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid label {label}: expected -1 or +1")]
    InvalidLabel { label: f64 },

    #[error("too few inputs for {rule}: n = {n}, f = {f}")]
    TooFewInputs { rule: &'static str, n: usize, f: usize },

    #[error("{mixing} breakdown exceeded: f/n = {f}/{n} must be below {limit}")]
    BreakdownExceeded {
        mixing: &'static str,
        n: usize,
        f: usize,
        limit: f64,
    },

    #[error("exhaustive subset enumeration supports n <= {max}, got {n}")]
    TooManyForEnumeration { n: usize, max: usize },

    #[error("dirichlet partition left an empty client after {retries} retries")]
    PartitionRetriesExhausted { retries: usize },

    #[error("negative inner product <grad, x - x*> = {0:e}; reference minimizer is likely wrong")]
    NegativeInnerProduct(f64),

    #[error("proximal solve failed after {iterations} inner iterations (criterion {criterion:e} > bound {bound:e})")]
    ProxNotConverged {
        iterations: usize,
        criterion: f64,
        bound: f64,
        best: ParamVector,
    },

    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    AtStage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::AtStage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }
}
