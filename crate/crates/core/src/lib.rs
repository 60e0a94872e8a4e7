//! Coupled Stuart-Landau oscillators.
//!
//! The crate simulates the system
//!
//! ```text
//! dz_j/dt = (alpha_j + i omega_j - |z_j|^2) z_j + (kappa/N) sum_l (z_l - z_j)
//! ```
//!
//! and implements the complete closed-form classification of its asymptotic
//! regimes (active / amplitude death crossed with phase-locked / incoherent,
//! including leader-driven synchronization), cross-validating every analytic
//! curve, fixed point, and stability verdict against direct numerical
//! integration.
//!
//! Modules:
//! - [`model`]: parameter/state types, vector field, observables;
//! - [`integrator`]: adaptive embedded Runge-Kutta solver and regime detectors;
//! - [`analytic2`]: all closed forms for two oscillators (transition curves,
//!   Riccati fixed points and solutions, locked-state solver, stability);
//! - [`ensemble`]: general-N results for identical natural frequencies
//!   (death conditions, active fixed point, synchronization diagnostics);
//! - [`opinion`]: the real-line reduction and its bifurcation structure;
//! - [`sweep`]: parameter-grid classification and agreement statistics;
//! - [`export`]: CSV/JSON writers for all documented artifact formats.

// Comparisons written as !(x > 0.0) are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic2;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod integrator;
pub mod model;
pub mod opinion;
pub mod sweep;

pub use error::{Result, SlError};
