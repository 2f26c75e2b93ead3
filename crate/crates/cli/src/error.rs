use std::fmt;

/// Failures mapped onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input data; exit status 2.
    Validation(String),
    /// Anything that goes wrong once the inputs were accepted; exit status 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<msdeconv::Error> for CliError {
    fn from(e: msdeconv::Error) -> Self {
        use msdeconv::Error as E;
        match e {
            E::UnsupportedDimension { .. }
            | E::InvalidParameter { .. }
            | E::DimensionMismatch { .. }
            | E::SpectralResolution { .. }
            | E::Csv { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
