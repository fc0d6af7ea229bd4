use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("insufficient skin pixels: {used} usable, {required} required")]
    InsufficientSkinPixels { used: usize, required: usize },

    #[error("invalid k: {0}")]
    InvalidK(String),

    #[error("no knee found in curve")]
    NoKnee,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient occupied bins: {0}")]
    InsufficientBins(String),

    #[error("design matrix is rank deficient ({rank} of {cols} columns independent)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error at {path}: {message}")]
    Codec { path: PathBuf, message: String },

    #[error("malformed data in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used in per-image error rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::InvalidThresholds(_) => "invalid_thresholds",
            Error::ImageTooSmall(_) => "image_too_small",
            Error::InvalidKernel(_) => "invalid_kernel",
            Error::InsufficientSkinPixels { .. } => "insufficient_skin_pixels",
            Error::InvalidK(_) => "invalid_k",
            Error::NoKnee => "no_knee",
            Error::OutOfRange(_) => "out_of_range",
            Error::InvalidParams(_) => "invalid_params",
            Error::InsufficientBins(_) => "insufficient_bins",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Io { .. } => "io",
            Error::Codec { .. } => "codec",
            Error::Format { .. } => "format",
        }
    }

    /// True for failures caused by the filesystem or file contents rather than numerics.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Codec { .. } | Error::Format { .. })
    }
}
