use gnnbench::Error;
use thiserror::Error as ThisError;

/// Failure of a CLI command, mapped onto the process exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 data, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Lib(e) => match e {
                Error::InvalidArgument(_) | Error::Json(_) => 1,
                Error::MissingFile(_)
                | Error::Io { .. }
                | Error::Parse { .. }
                | Error::Csv(_)
                | Error::LengthMismatch(_)
                | Error::CsrLengthMismatch { .. }
                | Error::NonCanonicalCsr(_)
                | Error::LabelOutOfRange { .. }
                | Error::EmptyClass(_)
                | Error::EmptyGraph
                | Error::AllClassesRemoved(_)
                | Error::ClassTooSmall { .. }
                | Error::InvalidSplit(_)
                | Error::MissingCells(_) => 2,
                _ => 3,
            },
        }
    }

    /// Re-labels a library error raised while reading a configuration.
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("invalid configuration: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
