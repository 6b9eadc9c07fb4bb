use std::io;
use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Exit status when every requested point converged.
pub const EXIT_OK: i32 = 0;
/// Exit status for a fatal error; nothing was written.
pub const EXIT_ERROR: i32 = 1;
// 2 is taken by clap for usage errors
/// Exit status when outputs were written but some sweep points or subsets
/// failed to converge.
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] selenc_core::Error),

    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Stable tag used in the structured error line.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(selenc_core::Error::SolverFailure { .. }) => "solver",
            CliError::Core(selenc_core::Error::NoConvergedPoints) => "solver",
            CliError::Core(_) => "invalid-input",
            CliError::Config(_) => "config",
            CliError::Io { .. } | CliError::Csv(_) => "io",
            CliError::Json { .. } | CliError::Parse { .. } => "parse",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub(crate) fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}
