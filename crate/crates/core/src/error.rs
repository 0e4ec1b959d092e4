use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid timetable: {0}")]
    Timetable(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("episode error: {0}")]
    Episode(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid transform: {0}")]
    Transform(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
