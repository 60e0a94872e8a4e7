//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, closed-form evaluation, and solvers.
#[derive(Debug, Error)]
pub enum SlError {
    /// Caller passed structurally inconsistent arguments (dimension mismatch,
    /// invalid option values, axis mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A closed-form expression was evaluated at a pole.
    #[error("pole encountered: {0}")]
    Pole(String),

    /// The adaptive integrator could not continue (step-size underflow).
    /// Carries the partial trajectory computed so far.
    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        partial: Box<crate::model::Trajectory>,
    },

    /// An iterative solver failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// An internal consistency guarantee failed; this signals a bug,
    /// not a user error.
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// A diagnostic encountered data it cannot process (e.g. an undefined
    /// amplitude ratio at a given time).
    #[error("diagnostic failure at t = {t}: {reason}")]
    Diagnostic { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, SlError>;
