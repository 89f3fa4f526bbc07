use thiserror::Error;

use crate::model::Outcome;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemonError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature failed to reach tolerance {requested:e} (estimated error {achieved:e}) within {budget} subdivisions")]
    QuadratureFailure {
        requested: f64,
        achieved: f64,
        budget: usize,
    },

    #[error("stroboscopic fixed point is degenerate (|phi2 - 1| = {gap:e})")]
    DegenerateFixedPoint { gap: f64 },

    #[error("moment paths disagree for {quantity}: finite difference {finite_difference:e}, analytic {analytic:e}")]
    MomentToleranceFailure {
        quantity: String,
        finite_difference: f64,
        analytic: f64,
    },

    #[error("particle conservation violated: dn_L + dn_R = {residual:e}")]
    ConservationViolation { residual: f64 },

    #[error("second law violated on branch {branch:?}: dS + dS_e = {total:e}")]
    SecondLawViolation { branch: Outcome, total: f64 },

    #[error("energy-weighted integral diverges without a finite cutoff ({0})")]
    CutoffRequired(String),

    #[error("requested time {requested} exceeds the recurrence horizon {horizon} of the discretized bath")]
    HorizonExceeded { requested: f64, horizon: f64 },

    #[error("measurement branch {branch:?} has negligible probability {probability:e}")]
    DegenerateBranch { branch: Outcome, probability: f64 },
}

pub type Result<T> = std::result::Result<T, DemonError>;

impl DemonError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            DemonError::InvalidConfig(_) => "invalid_config",
            DemonError::QuadratureFailure { .. } => "quadrature_failure",
            DemonError::DegenerateFixedPoint { .. } => "degenerate_fixed_point",
            DemonError::MomentToleranceFailure { .. } => "moment_tolerance_failure",
            DemonError::ConservationViolation { .. } => "conservation_violation",
            DemonError::SecondLawViolation { .. } => "second_law_violation",
            DemonError::CutoffRequired(_) => "cutoff_required",
            DemonError::HorizonExceeded { .. } => "horizon_exceeded",
            DemonError::DegenerateBranch { .. } => "degenerate_branch",
        }
    }
}
