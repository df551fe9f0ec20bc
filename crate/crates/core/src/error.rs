use thiserror::Error;

use crate::io::FormatError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("invalid spectral density: {0}")]
    InvalidDensity(String),

    #[error("empty measurement: spectrum has zero total counts")]
    EmptyMeasurement,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("wavelength {wavelength} nm outside tabulated range [{min}, {max}] nm")]
    OutOfRange { wavelength: f64, min: f64, max: f64 },

    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
