use thiserror::Error;

/// Errors raised by the analysis core.
///
/// Most of these are contract violations: they indicate a caller handed in
/// something outside an operation's domain, not a recoverable runtime state.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("probability {value} outside [0, 1] for {what}")]
    ProbabilityOutOfRange { what: &'static str, value: f64 },

    #[error("unsupported QRAC size n = {0}, expected 2 or 3")]
    UnsupportedN(usize),

    #[error("size mismatch for {what}: expected {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("not a valid density operator: {0}")]
    InvalidState(&'static str),

    #[error("not a valid projective measurement: {0}")]
    InvalidMeasurement(&'static str),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("{what} = {value} outside the curve domain [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("closed form left its valid branch: {0}")]
    BranchViolation(&'static str),

    #[error("target {target} is not reached anywhere on the curve (minimum {curve_min})")]
    TargetUnreachable { target: f64, curve_min: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite(what));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { what, value });
    }
    Ok(value)
}
