use std::path::PathBuf;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI maps them to exit codes:
/// configuration and input-format problems exit with 2, numerical or
/// stage failures with 3, and I/O failures with 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value or combination of values is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A text input does not conform to its documented format.
    #[error("format error: {0}")]
    Format(String),

    /// An operation was applied to data in the wrong state
    /// (e.g. perturbing an already perturbed dataset).
    #[error("state error: {0}")]
    State(String),

    /// A threshold selected an empty set.
    #[error("threshold error: {0}")]
    Threshold(String),

    /// Caller broke an API contract (shape or metadata mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An internal numerical guarantee failed; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// File system failure, annotated with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format(_) => 2,
            Error::Domain(_)
            | Error::State(_)
            | Error::Threshold(_)
            | Error::Contract(_)
            | Error::Internal(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
