use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ShellError>;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("unknown scenario `{0}` (expected fig1..fig5 or custom)")]
    UnknownScenario(String),

    #[error("unknown output kind `{0}` (expected density_xy, density_profile, vertical_view, wavefunction or report)")]
    UnknownOutput(String),

    #[error(transparent)]
    Core(#[from] wavetrain_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed metadata document: {0}")]
    Json(#[from] serde_json::Error),
}

impl ShellError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> ShellError {
        let path = path.into();
        move |source| ShellError::Io { path, source }
    }
}
