use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::subspace::Axis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: field `{field}`: {message}")]
    Schema {
        context: String,
        field: String,
        message: String,
    },

    #[error("joint `{joint}`: min {min} must be strictly below max {max}")]
    LimitInversion { joint: String, min: f64, max: f64 },

    #[error("{context}: joint reference `{reference}` does not resolve to a joint")]
    DanglingJoint { context: String, reference: String },

    #[error("unknown finger chain `{0}`")]
    UnknownFinger(String),

    #[error("expected a pose of {expected} joint angles, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("calibration: no pose labeled `{label}` and axis {axis} is not inert")]
    MissingLabel { axis: Axis, label: String },

    #[error("calibration pose {pose}: joint `{joint}` = {value} is outside [{min}, {max}]")]
    PoseOutOfLimits {
        pose: usize,
        joint: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("scaling factors: {0}")]
    InvalidScaling(String),

    #[error("expected data for model `{expected}`, found `{found}`")]
    ModelMismatch { expected: String, found: String },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn schema(context: impl Into<String>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            context: context.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// True for filesystem failures, as opposed to content that failed validation.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a TOML document, reporting failures with the line they occur on.
pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            path: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })
}

pub(crate) fn to_toml<T: serde::Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(format!("cannot serialize: {e}")))
}
