use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("effective potential needs q != 0 (use the bare potential instead)")]
    ZeroZeeman,

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("non-positive curvature {0:e} at the potential minimum")]
    NonPositiveCurvature(f64),

    #[error("noise path has {got} factors but the schedule needs {expected} steps")]
    NoiseLengthMismatch { expected: usize, got: usize },

    #[error("state is not localized: probability {outside:e} outside the central half-period")]
    NotLocalized { outside: f64 },

    #[error("photon number {0:e} below floor, g2 is ill-conditioned")]
    PhotonFloor(f64),

    #[error(
        "target frequency {target:e} rad/s unreachable; attainable range [{min:e}, {max:e}] rad/s"
    )]
    Unreachable { target: f64, min: f64, max: f64 },

    #[error("basis dimension {dim} exceeds cap {cap}")]
    BasisTooLarge { dim: usize, cap: usize },

    #[error("schedule error: {0}")]
    Schedule(String),
}

pub type Result<T> = std::result::Result<T, RotorError>;
