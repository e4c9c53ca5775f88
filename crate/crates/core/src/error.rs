use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: unknown category label `{label}`")]
    UnknownCategory { line: u64, label: String },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("geojson error: {0}")]
    GeoJson(String),
    #[error("missing environment: {0}")]
    MissingEnvironment(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("no candidate: {0}")]
    NoCandidate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
