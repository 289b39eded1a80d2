//! Error type of the command-line layer and its mapping to exit codes.

use std::path::PathBuf;

use nsk1d_core::CoreError;

/// Everything that can go wrong between argv and a finished emission.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or out-of-range configuration; `path` is a JSON pointer.
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    /// Errors raised by the solver library. Parameter problems count as
    /// validation; vacuum/stability failures count as numerical.
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A run that finished in a failure state (vacuum or collapsed step).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Filesystem problems, tagged with the path involved.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Process exit code: 1 validation, 2 numerical failure, 3 i/o.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Config { .. } => 1,
        CliError::Core(CoreError::Vacuum { .. } | CoreError::Unstable { .. }) => 2,
        CliError::Core(_) => 1,
        CliError::Numerical(_) => 2,
        CliError::Io { .. } => 3,
    }
}
