use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no clusters at this threshold")]
    NoClusters,

    #[error("no qualifying clusters of size >= {0}")]
    NoQualifyingClusters(usize),

    #[error("zero denominator in ratio estimator")]
    ZeroDenominator,

    #[error("series too short for block bootstrap: {n_times} time points, need at least {required}")]
    SeriesTooShort { n_times: usize, required: usize },

    #[error("all {0} bootstrap replicates were degenerate")]
    AllReplicatesDegenerate(usize),

    #[error("covariance not positive definite after jitter escalation (last jitter {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("temporally degenerate model: denominator {mean:e} within 3 standard errors ({se:e}) of zero")]
    TemporallyDegenerate { mean: f64, se: f64 },

    #[error("rank-deficient design at site {site}")]
    RankDeficient { site: usize },

    #[error("bad magic in {0}")]
    BadMagic(PathBuf),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("non-dense series: {0}")]
    NonDense(String),

    #[error("missing or non-finite value: {0}")]
    NonFinite(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class. Codes are stable and listed in the README.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Io { .. } => 3,
            Error::Json(_) => 4,
            Error::BadMagic(_) => 10,
            Error::Truncated(_) => 11,
            Error::NonDense(_) => 12,
            Error::NonFinite(_) => 13,
            Error::UnsupportedVersion(_) | Error::Malformed(_) => 14,
            Error::NoClusters | Error::NoQualifyingClusters(_) | Error::ZeroDenominator => 20,
            Error::SeriesTooShort { .. } | Error::AllReplicatesDegenerate(_) => 21,
            Error::NotPositiveDefinite { .. } => 22,
            Error::TemporallyDegenerate { .. } => 23,
            Error::RankDeficient { .. } => 24,
        }
    }
}
