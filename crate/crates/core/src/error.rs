use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("query outside calibrated hull: {0}")]
    Extrapolation(String),

    #[error("no calibration data for {0}")]
    Uncalibrated(String),

    #[error("calibration table is empty")]
    EmptyTable,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("samples are not uniformly spaced (index {index}: spacing {spacing} s, expected {expected} s)")]
    NonUniformSpacing {
        index: usize,
        spacing: f64,
        expected: f64,
    },

    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
