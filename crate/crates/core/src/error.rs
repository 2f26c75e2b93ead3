use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {got}: {reason}")]
    UnsupportedDimension { got: usize, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("incompatible kernel representations: {0}")]
    IncompatibleKernels(String),

    #[error(
        "spectral kernel configuration too coarse: estimated relative error {estimated:.3e} \
         exceeds tolerance {tolerance:.1e} (truncation {truncation:.3e}, periodisation {periodisation:.3e})"
    )]
    SpectralResolution {
        estimated: f64,
        tolerance: f64,
        truncation: f64,
        periodisation: f64,
    },

    #[error("Cholesky factorisation failed after eigenvalue floor {floor:e}")]
    Factorization { floor: f64 },

    #[error("degenerate limit model: {0}")]
    DegenerateModel(String),

    #[error("calibration failed: {reason}")]
    Calibration {
        reason: String,
        /// `(gamma, empirical level)` pairs evaluated before giving up.
        level_curve: Vec<(f64, f64)>,
    },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
