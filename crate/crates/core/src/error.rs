use thiserror::Error;

use crate::autodiff::DomainError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error("{routine} did not converge within {max_iter} iterations")]
    NoConvergence {
        routine: &'static str,
        max_iter: usize,
    },

    #[error("{routine}: linear system is singular or not positive definite")]
    SingularSystem { routine: &'static str },

    #[error("covariance has repeated or vanishing leading eigenvalues: {eigenvalues:?}")]
    DegenerateCovariance { eigenvalues: Vec<f64> },

    #[error("neighbourhood graph is disconnected (component sizes {component_sizes:?}); raise k or subset the data")]
    DisconnectedGraph { component_sizes: Vec<usize> },

    #[error("dual replay moved the fixed point by {moved:e} (limit {limit:e}); the captured fixed point is stale")]
    FixedPointMismatch { moved: f64, limit: f64 },

    #[error("randomized extraction needed more than {limit} rounds")]
    RoundLimitExceeded { limit: usize },

    #[error("while perturbing point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("in extraction round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("parse error at byte offset {offset}: {message}")]
    ParseBinary { offset: usize, message: String },

    #[error("non-numeric cell at row {row}, column {column}: {text:?}")]
    NonNumericCell {
        row: usize,
        column: usize,
        text: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_point(self, index: usize) -> Self {
        Error::AtPoint {
            index,
            source: Box::new(self),
        }
    }

    pub fn at_round(self, round: usize) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }

    pub fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }
}
