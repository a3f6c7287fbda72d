use thiserror::Error;

/// Failure of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad path, malformed file or invalid option.
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// The data was accepted but a pipeline stage failed.
    #[error("{0:#}")]
    Pipeline(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Pipeline(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with the exit code it should produce.
pub trait Classify<T> {
    fn input(self) -> CliResult<T>;
    fn pipeline(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> CliResult<T> {
        self.map_err(|e| CliError::Input(e.into()))
    }

    fn pipeline(self) -> CliResult<T> {
        self.map_err(|e| CliError::Pipeline(e.into()))
    }
}
