use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Engine {
        context: String,
        #[source]
        source: coherent_ft::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "ConfigParse",
            CliError::MissingField(_) => "MissingField",
            CliError::Io { .. } => "IOFailure",
            CliError::Engine { .. } => "Engine",
            CliError::Csv(_) => "IOFailure",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) | CliError::MissingField(_) => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            detail: match self {
                CliError::Engine { source, .. } => Some(source.to_string()),
                CliError::Io { source, .. } => Some(source.to_string()),
                _ => None,
            },
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn engine(context: impl Into<String>) -> impl FnOnce(coherent_ft::Error) -> Self {
        let context = context.into();
        move |source| CliError::Engine { context, source }
    }
}

/// Machine-readable failure report written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn missing(field: &str) -> CliError {
    CliError::MissingField(field.to_string())
}
