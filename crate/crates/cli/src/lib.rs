//! Driver for resonance computations: configuration files, the multilevel
//! solve, convergence tables, scattering checks, and CSV/JSON/SVG output.

pub mod commands;
pub mod config;
pub mod convergence;
pub mod plot;
pub mod report;

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Mesh(#[from] dtn_core::mesh::MeshError),
    #[error(transparent)]
    Multilevel(#[from] dtn_core::multilevel::MultilevelError),
    #[error(transparent)]
    Nep(#[from] dtn_core::nep::NepError),
    #[error(transparent)]
    Oracle(#[from] dtn_core::oracle::OracleError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}
