use thiserror::Error;

use crate::units::Dimension;

/// Errors from quantity arithmetic and unit parsing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    Mismatch { left: Dimension, right: Dimension },
    #[error("unsupported combination: {left:?} {op} {right:?}")]
    Unsupported {
        left: Dimension,
        op: char,
        right: Dimension,
    },
    #[error("unit `{unit}` does not measure {expected:?}")]
    WrongUnit { unit: String, expected: Dimension },
    #[error("cannot parse quantity `{0}`")]
    Malformed(String),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Errors raised by the design and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error("material `{0}` has no resistivity")]
    NotAConductor(String),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("infeasible design: {0}")]
    Infeasible(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("invalid budget: {0}")]
    Budget(String),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Failures inside the time integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(
        "simulation diverged at t = {time:.6e} s (stroke {stroke:.4} rad, pitch {pitch:.4} rad)"
    )]
    Divergence {
        time: f64,
        stroke: f64,
        pitch: f64,
        /// State at the end of the last accepted step.
        last_valid: crate::dynamics::SimState,
    },
    #[error("no interior amplitude maximum in [{lo} Hz, {hi} Hz]")]
    Bracket { lo: f64, hi: f64 },
    #[error("cycle window is not a whole number of periods ({0:.6} periods)")]
    PartialCycle(f64),
}

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> DesignError {
    DesignError::Invalid {
        what,
        reason: reason.into(),
    }
}
