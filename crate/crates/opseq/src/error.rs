use std::io;
use std::path::PathBuf;

use opseq_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{stage}{}: {source}", sample.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        sample: Option<String>,
        #[source]
        source: CoreError,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status: 1 config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Format { .. } => 2,
            Error::Stage { source, .. } | Error::Core(source) => match source {
                CoreError::Numeric { .. } => 3,
                CoreError::InvalidParameter(_) | CoreError::UnsupportedShape(_) => 1,
                _ => 2,
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str, sample: Option<&str>) -> Result<T>;
}

impl<T> StageExt<T> for std::result::Result<T, CoreError> {
    fn stage(self, stage: &'static str, sample: Option<&str>) -> Result<T> {
        self.map_err(|source| Error::Stage {
            stage,
            sample: sample.map(str::to_string),
            source,
        })
    }
}
