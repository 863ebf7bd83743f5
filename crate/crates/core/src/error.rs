use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the crate.
///
/// The variants follow the three broad failure classes the CLI maps to exit
/// codes: bad parameters/configuration (2) and bad data or I/O (3).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside its valid domain (non-positive alpha, empty list, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Mismatched lengths between inputs that must agree.
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// An inconsistent combination of options, e.g. Rule 1 on hierarchical output.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Data error located at a specific file, row and column.
    pub(crate) fn at(
        path: &std::path::Path,
        row: usize,
        column: &str,
        message: impl std::fmt::Display,
    ) -> Self {
        Error::Data(format!(
            "{} row {} column '{}': {}",
            path.display(),
            row,
            column,
            message
        ))
    }

    /// Whether the error stems from user configuration rather than data or I/O.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Shape { .. } | Error::Config(_)
        )
    }
}
