use std::path::PathBuf;

use phlab::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown model {id:?}; valid ids: {valid}")]
    UnknownModel { id: String, valid: String },
    #[error("unknown experiment {id:?}; valid ids: {valid}")]
    UnknownExperiment { id: String, valid: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
