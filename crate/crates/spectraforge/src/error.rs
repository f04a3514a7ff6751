use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] spectraforge_core::Error),
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("path does not exist: {}", .0.display())]
    MissingPath(PathBuf),
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        AppError::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.class(),
            AppError::Format { .. } => "FormatError",
            AppError::Io { .. } => "IoError",
            AppError::MissingPath(_) | AppError::Usage(_) => "UsageError",
        }
    }

    /// 2 for invocation problems, 1 for everything that failed while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::MissingPath(_) | AppError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

/// Fails with [`AppError::MissingPath`] unless `path` exists.
pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(AppError::MissingPath(path.to_path_buf()))
    }
}
