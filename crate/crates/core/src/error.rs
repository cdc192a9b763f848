//! Crate-wide error type.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed container or file header.
    #[error("format error in {path:?}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// WAV container carries an encoding this decoder does not support.
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),

    /// Invalid configuration value or key.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input dimensions do not match what an operation expects.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// Training corpus has no variance to standardize away.
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    /// Training data does not cover enough classes.
    #[error("training data error: {0}")]
    TrainingData(String),

    /// NaN or infinite value where a finite one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Cosine similarity against a zero-norm vector.
    #[error("zero-norm embedding")]
    ZeroNorm,

    /// Gallery is empty or otherwise unusable for matching.
    #[error("gallery error: {0}")]
    Gallery(String),

    /// Face detector failure, annotated with the frame it happened on.
    #[error("detector failed on frame {frame_index}: {reason}")]
    Detector { frame_index: usize, reason: String },

    /// External inference runtime failure.
    #[error("external runtime error: {0}")]
    Runtime(String),

    /// Label outside the declared class set.
    #[error("unknown label: {0}")]
    UnknownLabel(String),

    /// Metric is undefined for the given inputs.
    #[error("metric error: {0}")]
    Metric(String),

    /// Underlying IO failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Any error that occurred while processing a specific clip.
    #[error("clip {clip_id}: {source}")]
    Clip {
        clip_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a clip id to an error bubbling out of per-clip processing.
    pub fn for_clip(self, clip_id: &str) -> Error {
        Error::Clip {
            clip_id: clip_id.to_string(),
            source: Box::new(self),
        }
    }

    /// Format error helper.
    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Error {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
