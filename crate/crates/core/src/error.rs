use std::path::PathBuf;

use crate::model::Subspace;

/// Errors produced anywhere in the readout toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("preparation {0:?} has no recorded trials")]
    ZeroTotal(Subspace),

    #[error("invalid generative config: {0}")]
    InvalidConfig(String),

    #[error("invalid coarse model: {0}")]
    InvalidModel(String),

    #[error("reference counts for {0:?} are empty")]
    EmptyColumn(Subspace),

    #[error("invalid smoothing floor {0}; must lie in (0, 1/4)")]
    InvalidFloor(f64),

    #[error("round source ended after {rounds} rounds without reaching a decision")]
    SourceExhausted { rounds: usize },

    #[error("expected {expected} rounds, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid readout policy: {0}")]
    InvalidPolicy(String),

    #[error("c = {0} must exceed 1/2")]
    InvalidC(f64),

    #[error("beta = {beta} does not satisfy 0 < 3*beta < alpha = {alpha}")]
    InvalidBeta { alpha: f64, beta: f64 },

    #[error("significance level {0} must lie in (0, 1)")]
    InvalidSignificance(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(what: &'static str, detail: impl ToString) -> Self {
        Error::Parse {
            what,
            detail: detail.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
