use std::path::PathBuf;

/// Errors raised across the forgelens pipelines.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("unsupported image format")]
    UnsupportedFormat,

    #[error("corrupt image stream: {0}")]
    CorruptStream(String),

    #[error("failed to encode image: {0}")]
    EncodeFailure(String),

    #[error("JPEG quality {0} outside [1, 100]")]
    InvalidQuality(i64),

    #[error("invalid blur kernel size {0} (must be odd and >= 3)")]
    InvalidKernel(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("cannot fit scaling on an empty set")]
    EmptySet,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: model expects {expected}, input has {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("evaluation point within eps of the hinge kink (margin {0})")]
    KinkProximity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("model format/version mismatch: {0}")]
    FormatVersionMismatch(String),

    #[error("model checksum mismatch: {0}")]
    ChecksumMismatch(String),

    #[error("corpus root {0} does not exist")]
    MissingRoot(PathBuf),

    #[error("corpus at {0} contains no images")]
    EmptyCorpus(PathBuf),

    #[error("image too small for forgery synthesis: {0}")]
    ImageTooSmall(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("empty input")]
    Empty,

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
