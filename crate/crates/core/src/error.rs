use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel not admissible: {0}")]
    KernelNotAdmissible(String),

    #[error("finite-activity required: {0}")]
    FiniteActivityRequired(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("survival overflow: integrated intensity {0} is below -700")]
    SurvivalOverflow(f64),

    #[error("degenerate survival: S_t = {0}")]
    DegenerateSurvival(f64),

    #[error("kernel undefined at nonpositive intensity {0}")]
    NonPositiveIntensity(f64),

    #[error("query ({x}, {y}) lies outside the grid [{x_min}, {x_max}] x [{y_min}, {y_max}]")]
    OutOfGrid {
        x: f64,
        y: f64,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },

    #[error("PIDE solver unstable at step {step} (sup-norm {sup_norm:e}); retry with at least {suggested_steps} time steps")]
    Unstable {
        step: usize,
        sup_norm: f64,
        suggested_steps: usize,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("positive real required, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("nonnegative real required, got {value}")))
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, format!("finite real required, got {value}")))
    }
}
