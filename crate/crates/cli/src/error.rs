//! Error type of the driver crate.

use std::path::PathBuf;

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, CliError>;

/// Everything that can stop a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration could not be parsed or failed validation.
    #[error("{source_name}:{line}: {message}")]
    Config {
        /// File name (or `<flags>` for command-line overrides).
        source_name: String,
        /// One-based line of the offending key, 0 when unknown.
        line: usize,
        /// What is wrong.
        message: String,
    },
    /// A time-series or manifest file violates its format.
    #[error("{path}: {message}")]
    Format {
        /// Offending file.
        path: PathBuf,
        /// What is wrong.
        message: String,
    },
    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        /// File being accessed.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Numerical failure reported by the core crate.
    #[error("{context}: {source}")]
    Core {
        /// Pipeline stage that failed.
        context: String,
        /// Underlying error.
        source: kerr_ergo_core::Error,
    },
    /// An analysis could not run because an earlier stage is missing or failed.
    #[error("analysis: {0}")]
    Analysis(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Attaches a stage name to core errors.
pub(crate) trait CoreContext<T> {
    fn stage(self, context: &str) -> Result<T>;
}

impl<T> CoreContext<T> for kerr_ergo_core::Result<T> {
    fn stage(self, context: &str) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: context.to_string(),
            source,
        })
    }
}
