use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Variants carry the last iterate or the offending location so callers can
/// report partial progress.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum JostError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {requested} exceeds the declared horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("no convergence after {n} steps (last value {last}, oscillation {oscillation:e})")]
    NonConvergence {
        last: Complex64,
        oscillation: f64,
        n: usize,
    },

    #[error("z = {z} lies on an eigenvalue of the stripped matrix at level {level}")]
    EigenvalueHit { level: usize, z: Complex64 },

    #[error("evaluation point {z} is a pole")]
    PoleHit { z: Complex64 },

    #[error("extrapolation toward the boundary is unstable (spread {spread:e})")]
    ExtrapolationUnstable { spread: f64 },

    #[error("quadrature did not reach tolerance with {panels} panels (estimate {estimate:e})")]
    QuadratureFailure { panels: usize, estimate: f64 },

    #[error("the product of off-diagonal entries does not converge")]
    BetaFailure,

    #[error("{unconverged} eigenvalue(s) did not converge across truncations")]
    SpectrumIncomplete { unconverged: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),
}

impl JostError {
    /// Validation problems are caller mistakes; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            JostError::InvalidInput(_) | JostError::HorizonExceeded { .. }
        )
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            JostError::InvalidInput(_) => "invalid_input",
            JostError::HorizonExceeded { .. } => "horizon_exceeded",
            JostError::NonConvergence { .. } => "non_convergence",
            JostError::EigenvalueHit { .. } => "eigenvalue_hit",
            JostError::PoleHit { .. } => "pole_hit",
            JostError::ExtrapolationUnstable { .. } => "extrapolation_unstable",
            JostError::QuadratureFailure { .. } => "quadrature_failure",
            JostError::BetaFailure => "beta_failure",
            JostError::SpectrumIncomplete { .. } => "spectrum_incomplete",
            JostError::NotApplicable(_) => "not_applicable",
        }
    }
}

pub type Result<T> = std::result::Result<T, JostError>;

pub(crate) fn invalid(msg: impl Into<String>) -> JostError {
    JostError::InvalidInput(msg.into())
}
