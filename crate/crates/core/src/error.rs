//! Error type shared by the whole crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("failed to encode {path}: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("{path}: unsupported bit depth (only 8-bit PNG is supported)")]
    UnsupportedBitDepth { path: PathBuf },

    #[error("{path}: unsupported color type (only grayscale and RGB are supported)")]
    UnsupportedColorType { path: PathBuf },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} distinct sites but the image has only {available} pixels")]
    TooManySites { requested: usize, available: usize },

    #[error("style pool is empty: {0}")]
    EmptyStylePool(String),

    #[error("style {style_id:?} not found for content {content_id:?}")]
    MissingStyle { content_id: String, style_id: String },

    #[error("prediction contains class id {id} but only {classes} classes were declared")]
    PredictionOutOfRange { id: u8, classes: usize },

    #[error("no evaluable classes: every class is absent from both prediction and ground truth")]
    NoEvaluableClasses,

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("manifest error: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
