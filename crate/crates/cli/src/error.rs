use chernq_core::{Error, ErrorClass};
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn core(context: impl Into<String>, source: Error) -> CliError {
        CliError::Core { context: context.into(), source }
    }

    /// 2 config, 3 gap closure or degeneracy, 4 backend failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Json(_) => 2,
            CliError::Core { source, .. } => match source.class() {
                ErrorClass::Config => 2,
                ErrorClass::Physics => 3,
                ErrorClass::Backend => 4,
            },
            CliError::Io { .. } => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(source: Error) -> CliError {
        CliError::Core { context: "run failed".into(), source }
    }
}
