use std::path::{Path, PathBuf};

use sms_core::error::ErrorKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sms_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed curve or model file.
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Bad cell or row shape in a dataset CSV. `row` counts file lines
    /// from 1, header included.
    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Csv {
        path: PathBuf,
        row: u64,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split {split}: {source}")]
    Split {
        split: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 2 configuration, 3 data, 4 schema, 5 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Schema => 4,
                ErrorKind::Numerical => 5,
            },
            Error::Io { .. } | Error::Config(_) => 2,
            Error::Format { .. } | Error::Csv { .. } => 3,
            Error::Split { source, .. } => source.exit_code(),
        }
    }
}
