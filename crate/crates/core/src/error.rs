use std::path::PathBuf;

use thiserror::Error;

use crate::emotion::EmotionLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {width}x{height}, at least 3x3 required")]
    ImageTooSmall { width: usize, height: usize },

    #[error("image data length {len} does not match {width}x{height}")]
    ImageDataLength { width: usize, height: usize, len: usize },

    #[error("grid {rows}x{cols} is larger than code map {width}x{height}")]
    GridTooLarge {
        rows: usize,
        cols: usize,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing samples for labels: {0:?}")]
    MissingLabels(Vec<EmotionLabel>),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("window [{start}, {end}) contains no frames")]
    EmptyWindow { start: f64, end: f64 },

    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotonic { index: usize },

    #[error("singular innovation covariance")]
    SingularInnovation,

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("corrupt record {path}: {reason}")]
    CorruptRecord { path: PathBuf, reason: String },

    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("session mismatch: events belong to `{events}`, truth to `{truth}`")]
    SessionMismatch { events: String, truth: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image decode: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, field: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}
