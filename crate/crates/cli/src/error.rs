use serde::Serialize;

/// Versioned tag of the error record written on failure.
pub const ERROR_SCHEMA: &str = "qkd-sift/error/v1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qkd_sift::Error),
}

/// Machine-readable failure record.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub schema: &'static str,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Validation(_) => "validation_error",
            CliError::Io(_) => "io_error",
            CliError::Core(_) => "module_error",
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (line, column) = match self {
            CliError::Parse { line, column, .. } => (Some(*line), Some(*column)),
            _ => (None, None),
        };
        ErrorRecord { schema: ERROR_SCHEMA, kind: self.kind(), message: self.to_string(), line, column }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
