use thiserror::Error;

/// Errors raised by lattice construction, simulation and the numerical solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum XwalkError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid walker rates: {0}")]
    InvalidRates(String),
    #[error("invalid local function: {0}")]
    InvalidLocalFunction(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid epsilon: {0}")]
    InvalidEpsilon(String),
    #[error("walker left the window at t = {time}")]
    WindowExhausted { time: f64 },
    #[error("absorbing state: total jump rate is zero")]
    AbsorbingState,
    #[error("numerical scheme failure: {0}")]
    SchemeFailure(String),
    #[error("path left the solution domain at t = {t}, x = {x}")]
    DomainExhausted { t: f64, x: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, XwalkError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> XwalkError {
    XwalkError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
