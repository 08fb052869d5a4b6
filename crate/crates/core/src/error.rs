use thiserror::Error;

use crate::dynamics::Representation;

/// Errors produced by the model, the analysis routines and the integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("agent index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    /// Value pair too close to zero for the normalized difference to exist.
    #[error("singular value state at agent {agent}: value sum {sum:e} below guard")]
    SingularValueState { agent: usize, sum: f64 },

    #[error("wrong vector field: {0}")]
    WrongField(&'static str),

    #[error("unsupported dimension: expected {expected}, found {found}")]
    UnsupportedDimension { expected: usize, found: usize },

    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("eigensolver did not converge for a {size}x{size} matrix")]
    Eigensolver { size: usize },

    #[error("step size underflow at t = {t} (h = {h:e}); problem may be stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {steps} exhausted at t = {t}")]
    TooManySteps { t: f64, steps: usize },

    #[error("state integrity violated at t = {t}: {detail}")]
    Integrity { t: f64, detail: String },

    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures caused by bad inputs rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::IndexOutOfRange { .. }
                | Error::WrongField(_)
                | Error::UnsupportedDimension { .. }
                | Error::RepresentationMismatch { .. }
                | Error::Unsupported(_)
        )
    }
}
