use clids_core::Error;

/// Everything a command can fail with. `name()` is printed on stderr and
/// `exit_code()` becomes the process status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("file is empty (no header row)")]
    EmptyFile,
    #[error("{0}")]
    Io(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("gradient check failed for: {}", .0.join(", "))]
    GradcheckFailed(Vec<String>),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::MissingColumn(_) => "MissingColumn",
            CliError::EmptyFile => "EmptyFile",
            CliError::Io(_) => "Io",
            CliError::Csv(_) => "Csv",
            CliError::Json(_) => "Json",
            CliError::InvalidArguments(_) => "InvalidArguments",
            CliError::GradcheckFailed(_) => "GradcheckFailed",
        }
    }

    /// 1 gradient check failure, 2 bad flags or configuration, 3 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::GradcheckFailed(_) => 1,
            CliError::InvalidArguments(_) | CliError::Core(Error::InvalidConfig(_)) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}
