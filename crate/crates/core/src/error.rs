use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or model shapes are incompatible.
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A binary file did not match its format.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    /// The checkpoint payload does not match its stored checksum.
    #[error("checkpoint CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Crc { stored: u32, computed: u32 },

    #[error("no solid voxels")]
    NoSolidVoxels,

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A loss term became NaN or infinite during training.
    #[error("non-finite {term} at step {step}: {value}")]
    NonFinite {
        step: usize,
        term: &'static str,
        value: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidArgument(reason.into())
    }
}
