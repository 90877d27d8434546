use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("pixel matches need an intrinsics file")]
    MissingIntrinsics,
    #[error("{found} matches, at least {required} required")]
    TooFewMatches { found: usize, required: usize },
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("estimator failed: {0}")]
    Estimator(#[from] twoview_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::MissingIntrinsics => "MissingIntrinsics",
            CliError::TooFewMatches { .. } => "TooFewMatches",
            CliError::Config { .. } => "ConfigError",
            CliError::DimensionMismatch(_) => "DimensionMismatch",
            CliError::Io { .. } => "IoError",
            CliError::Estimator(e) => e.kind(),
        }
    }

    /// Process exit code: 2 for input problems, 3 for estimator failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Estimator(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn read_file(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
