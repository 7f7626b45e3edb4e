use thiserror::Error;

pub type Result<T> = std::result::Result<T, PlatoonError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatoonError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("k_a = {ka} outside admissible range (0, {max}) for this SNR")]
    KaOutOfRange { ka: f64, max: f64 },

    #[error("malformed trajectory: {0}")]
    Structural(String),

    #[error("frequency-domain analysis failed: {0}")]
    AnalysisFailure(String),

    #[error("simulation diverged at t = {t} s (vehicle {vehicle}, |state| = {magnitude:e})")]
    Diverged {
        t: f64,
        vehicle: usize,
        magnitude: f64,
    },

    #[error("link index {index} out of range 1..={followers}")]
    LinkOutOfRange { index: usize, followers: usize },

    #[error("channel mismatch: {0}")]
    Channel(String),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PlatoonError::InvalidParameter {
            name,
            value,
            reason: "must be a finite positive number",
        })
    }
}
