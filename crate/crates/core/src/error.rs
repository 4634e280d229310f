use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, EapoError>;

#[derive(Debug, Error)]
pub enum EapoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all intensities are zero; the penalty is undefined")]
    AllZeroIntensity,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: u64,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("refused: {0}")]
    Refused(String),
}

impl EapoError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            EapoError::Config(_) => 1,
            EapoError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EapoError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(EapoError::InvalidInput(format!(
            "{what} contains non-finite values"
        )))
    }
}
