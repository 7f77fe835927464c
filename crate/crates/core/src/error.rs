use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("field violates an admissibility constraint: {0}")]
    Inadmissible(String),

    #[error("parity inconsistency: {0}")]
    Parity(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("non-finite or runaway field at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("snapshot out of order: t = {t} precedes last accumulated time {last}")]
    OutOfOrder { t: f64, last: f64 },

    #[error("invalid initial data: {0}")]
    InitialData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed snapshot file: {0}")]
    Snapshot(String),

    #[error("no artifacts found in {0}")]
    NoArtifacts(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
