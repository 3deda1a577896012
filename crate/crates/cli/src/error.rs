use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, descriptors or inputs. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// A check that validated inputs should never trip. Exit code 2.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

pub fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}
