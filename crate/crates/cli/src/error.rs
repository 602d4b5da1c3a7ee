use decoherence_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config key `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("dimension mismatch: {first} is {first_dim}x{first_dim} but {second} is {second_dim}x{second_dim}")]
    Dimension { first: String, first_dim: usize, second: String, second_dim: usize },

    #[error("task {task}: {source}")]
    Task { task: &'static str, source: CoreError },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { key: key.into(), message: message.into() }
    }

    /// 2 for anything wrong with the input, 3 when the numbers lack the
    /// structure the analysis needs, 1 for I/O trouble on output.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Task { source, .. } if source.is_numerical_structure() => 3,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}
