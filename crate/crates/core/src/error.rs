use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The last qubit has (numerically) no weight on |0⟩, so the subsystem
    /// cannot be extracted by projection.
    #[error("degenerate projection: P(last qubit = 0) = {prob:e} is below {threshold:e}")]
    DegenerateProjection { prob: f64, threshold: f64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
