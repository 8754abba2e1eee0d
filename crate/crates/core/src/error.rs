use thiserror::Error;

use crate::framework::ProbeSetting;

/// Failure kinds shared by every module.
///
/// The CLI maps these onto exit codes through [`Error::class`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("physically unrealizable: {0}")]
    Unrealizable(String),

    #[error("weak value undefined: |<psi_f|psi_i>| = {overlap:.3e}")]
    UndefinedWeakValue { overlap: f64 },

    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(String),

    #[error("undefined estimate from counts ({reason}); counts: {counts}")]
    UndefinedEstimate { reason: String, counts: String },

    #[error("missing probe setting {0:?}")]
    MissingSetting(ProbeSetting),

    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),

    #[error("slot {slot} is not compilable: {reason}")]
    NotCompilable { slot: usize, reason: String },

    #[error("state has no zero-momentum component (|<p0|psi>| = {dc:.3e})")]
    DcNull { dc: f64 },
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input that no physical reinterpretation can fix.
    Input,
    /// Input violating a physical bound or a protocol precondition.
    Physicality,
    /// Estimator with a vanishing denominator.
    Degenerate,
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::InvalidDistribution(_)
            | Error::MissingSetting(_) => ErrorClass::Input,
            Error::UndefinedWeakValue { .. }
            | Error::DegenerateEstimator(_)
            | Error::UndefinedEstimate { .. } => ErrorClass::Degenerate,
            Error::NotHermitian { .. }
            | Error::NoConvergence { .. }
            | Error::Invalid { .. }
            | Error::Unrealizable(_)
            | Error::NotCompilable { .. }
            | Error::DcNull { .. } => ErrorClass::Physicality,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
