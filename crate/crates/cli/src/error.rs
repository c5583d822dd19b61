//! CLI error type with one exit code per error class.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing prerequisite artifact: {path} (run `{stage}` first)")]
    MissingPrerequisite { path: String, stage: String },

    #[error("malformed input {path}: {message}")]
    MalformedInput { path: String, message: String },

    #[error("score sheet is missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}: column `{column}` value {value} is out of range [{min}, {max}]")]
    ScoreOutOfRange {
        row: usize,
        column: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("no rows survived score ingestion filtering")]
    EmptyIngest,

    #[error("duplicate participant id `{id}` in {context}")]
    DuplicateKey { id: String, context: String },

    #[error("feature/score join produced zero rows")]
    EmptyJoin,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Stable nonzero exit code per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingPrerequisite { .. } => 3,
            CliError::MalformedInput { .. } => 4,
            CliError::MissingColumn { .. }
            | CliError::ScoreOutOfRange { .. }
            | CliError::EmptyIngest
            | CliError::DuplicateKey { .. }
            | CliError::EmptyJoin => 5,
            CliError::Numeric(_) => 6,
            CliError::Io(_) => 7,
        }
    }
}

impl From<aphasia_core::error::EvalError> for CliError {
    fn from(e: aphasia_core::error::EvalError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<aphasia_core::error::StatsError> for CliError {
    fn from(e: aphasia_core::error::StatsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<aphasia_core::error::GnnError> for CliError {
    fn from(e: aphasia_core::error::GnnError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
