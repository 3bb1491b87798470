use thiserror::Error;

use crate::qmath::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("matrix is not Hermitian (max |a - a^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("target vector is not normalized (norm = {norm})")]
    Unnormalized { norm: f64 },

    #[error("state is not physical: {0}")]
    NotPhysical(ValidationReport),

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("tomography setting {setting} has zero recorded events")]
    ZeroCounts { setting: String },

    #[error("purification never succeeds on this input (success probability {probability:e})")]
    AlwaysDiscard { probability: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("fixture {path}: {reason}")]
    Fixture { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the input description rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_) | Error::Io(_))
    }

    pub(crate) fn out_of_range(what: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { what, value, range }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
