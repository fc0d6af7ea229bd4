use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<derma_core::Error> for CliError {
    fn from(e: derma_core::Error) -> Self {
        use derma_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Codec { .. } => CliError::Io(msg),
            E::Format { .. }
            | E::InvalidParams(_)
            | E::OutOfRange(_)
            | E::InvalidThresholds(_)
            | E::InvalidKernel(_)
            | E::InvalidK(_)
            | E::ImageTooSmall(_)
            | E::DimensionMismatch(_) => CliError::Usage(msg),
            E::DegenerateInput(_)
            | E::NoKnee
            | E::InsufficientSkinPixels { .. }
            | E::InsufficientBins(_)
            | E::RankDeficient { .. }
            | E::InsufficientData(_) => CliError::Numeric(msg),
        }
    }
}
