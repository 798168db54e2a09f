use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the domain of an operation (empty input, duplicates, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent data, e.g. diagram keys that do not match stack labels.
    #[error("data integrity error: {0}")]
    Integrity(String),

    /// A calibration or test statistic sample has zero variance.
    #[error("degenerate variance for {0}")]
    DegenerateVariance(String),

    /// Calibration and observation were produced under different conventions.
    #[error("config hash mismatch: calibration {calibration}, observed {observed}")]
    HashMismatch { calibration: String, observed: String },

    /// A Monte Carlo replication failed.
    #[error("replication {index} (seed {seed}) failed: {source}")]
    Replication {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// Malformed input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
