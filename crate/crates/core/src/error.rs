use std::path::PathBuf;

use thiserror::Error;

use crate::case::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("case is invalid:\n{0}")]
    Validation(ValidationReport),

    #[error("non-positive per-unit base: {0}")]
    InvalidBase(f64),

    #[error("forecast: {0}")]
    Forecast(String),

    #[error("model: {0}")]
    Model(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("enumeration budget exceeded: {binaries} binaries > budget {budget}")]
    BudgetExceeded { binaries: usize, budget: usize },

    #[error("plan: {0}")]
    Plan(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
