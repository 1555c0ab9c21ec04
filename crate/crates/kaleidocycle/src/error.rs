use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    SchemaVersion { found: u64, supported: u64 },

    #[error("invalid state: {0}")]
    InvalidState(#[from] kaleidocycle_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
