//! Batch front end for lifecat: catalog ingestion, run configuration and the
//! `fit`, `diagnose`, `risk`, `price` and `simulate` commands.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

pub use catalog::{CatalogRecord, EventCatalog};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: malformed files, out-of-range options, invalid configuration.
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] lifecat::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lifecat::Error as E;
        match self {
            CliError::Invalid(_) => 2,
            CliError::Model(
                E::Config(_)
                | E::InvalidParameter { .. }
                | E::Domain(_)
                | E::InsufficientData { .. },
            ) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
