use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("expected a {expected}-channel image, got {actual} channels")]
    WrongChannels { expected: u8, actual: u8 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image has no pixels")]
    EmptyImage,
    #[error("histogram is empty (total count is zero)")]
    EmptyHistogram,

    #[error("image is too small: {0}")]
    ImageTooSmall(String),
    #[error("no valid pixel pairs for offset ({dx}, {dy})")]
    NoValidPairs { dx: i32, dy: i32 },
    #[error("no shape found: image has a single gray level")]
    NoShape,
    #[error("boundary too short: {0} points (need at least 8)")]
    BoundaryTooShort(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    #[error("histogram is not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("unknown color name: {0}")]
    UnknownColor(String),
    #[error("color proportions sum to {0}, which exceeds 1")]
    ProportionOverflow(f64),
    #[error("unknown metric: {0}")]
    UnknownMetric(String),

    #[error("no loadable images in {0}")]
    EmptyCorpus(PathBuf),
    #[error("index contains no signatures")]
    EmptyStore,
    #[error("extraction config mismatch: expected {expected}, got {actual}")]
    ConfigMismatch { expected: String, actual: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("corrupt index file: {0}")]
    CorruptIndex(String),
    #[error("index file has no config_hash")]
    MissingConfigHash,
    #[error("unknown image id: {0}")]
    UnknownImage(String),

    #[error("precision is undefined when nothing was retrieved")]
    EmptyRetrieval,
    #[error("recall is undefined when there are no relevant images")]
    NoRelevantSet,
    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),

    #[error("feedback must contain at least one relevant or not-relevant label")]
    AllNeutral,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// True for failures of the environment (missing or unreadable files)
    /// rather than of the data or the request.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::FileNotFound(_) | Error::Io { .. })
    }
}
