//! Parameter and state types for coupled Stuart-Landau oscillators, the
//! vector field in Cartesian and polar form, observables, and the co-rotating
//! frame shift.
//!
//! The model for `N` oscillators with complex states `z_j` is
//!
//! ```text
//! dz_j/dt = (alpha_j + i omega_j - |z_j|^2) z_j + (kappa/N) sum_l (z_l - z_j)
//! ```
//!
//! All types are immutable value objects after construction; every operation
//! here is a pure function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlError};

/// Floor below which a phase can no longer be trusted; see
/// [`Trajectory::frozen_from`].
pub const PHASE_FLOOR: f64 = 1e-150;

/// Wrap an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = theta.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w -= tau;
    }
    w
}

/// Full parameter point: oscillator count, coupling, inherent amplitudes and
/// natural frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    n: usize,
    kappa: f64,
    alpha: Vec<f64>,
    omega: Vec<f64>,
}

impl OscillatorParams {
    pub fn new(kappa: f64, alpha: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(SlError::Contract("need at least one oscillator".into()));
        }
        if omega.len() != n {
            return Err(SlError::Contract(format!(
                "alpha has {} entries but omega has {}",
                n,
                omega.len()
            )));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(SlError::Contract(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        if alpha.iter().chain(omega.iter()).any(|v| !v.is_finite()) {
            return Err(SlError::Contract("alpha and omega entries must be finite".into()));
        }
        Ok(Self { n, kappa, alpha, omega })
    }

    /// Two oscillators with identical `alpha` and opposite frequencies
    /// `omega_1 = -omega_2 = gamma/2`, the twin configuration.
    pub fn twin(alpha: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::new(kappa, vec![alpha, alpha], vec![gamma / 2.0, -gamma / 2.0])
    }

    /// Two oscillators with amplitudes `(alpha1, alpha2)` and frequencies
    /// `(gamma/2, -gamma/2)`.
    pub fn pair(alpha1: f64, alpha2: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::new(kappa, vec![alpha1, alpha2], vec![gamma / 2.0, -gamma / 2.0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Amplitude heterogeneity `a = max_{i,j} |alpha_i - alpha_j|`.
    pub fn a_het(&self) -> f64 {
        let max = self.alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Frequency heterogeneity `gamma = max_{i,j} |omega_i - omega_j|`.
    pub fn g_het(&self) -> f64 {
        let max = self.omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.omega.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Largest inherent amplitude.
    pub fn alpha_max(&self) -> f64 {
        self.alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-oscillator complex positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    z: Vec<Complex64>,
}

impl EnsembleState {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.is_empty() {
            return Err(SlError::Contract("state must be non-empty".into()));
        }
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SlError::Contract("state components must be finite".into()));
        }
        Ok(Self { z })
    }

    pub fn from_polar(r: &[f64], phi: &[f64]) -> Result<Self> {
        if r.len() != phi.len() {
            return Err(SlError::Contract("r and phi lengths differ".into()));
        }
        Self::new(
            r.iter()
                .zip(phi)
                .map(|(&ri, &pi)| Complex64::from_polar(ri, pi))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    /// Amplitudes `r_j = |z_j|`.
    pub fn radii(&self) -> Vec<f64> {
        self.z.iter().map(|v| v.norm()).collect()
    }

    /// Phases `phi_j` wrapped to `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.z.iter().map(|v| wrap_angle(v.im.atan2(v.re))).collect()
    }
}

/// Derived scalar and matrix observables of one state under one parameter
/// point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observables {
    pub n: usize,
    /// Row-major `n x n` matrix of wrapped phase differences `Phi_jk = phi_j - phi_k`.
    pub phase_diffs: Vec<f64>,
    /// Row-major `n x n` matrix of amplitude ratios `R_jk = r_j / r_k`;
    /// `None` where the denominator vanishes.
    pub ratios: Vec<Option<f64>>,
    /// Mean phase `Psi = (1/N) sum phi_j`.
    pub mean_phase: f64,
    /// `l = r_1^2 - r_2^2`, defined only for `N = 2`.
    pub amp_gap: Option<f64>,
    /// Amplitude heterogeneity of the parameter point.
    pub a_het: f64,
    /// Frequency heterogeneity of the parameter point.
    pub g_het: f64,
}

impl Observables {
    pub fn compute(state: &EnsembleState, params: &OscillatorParams) -> Result<Self> {
        let n = state.n();
        if n != params.n() {
            return Err(SlError::Contract(format!(
                "state dimension {} does not match params dimension {}",
                n,
                params.n()
            )));
        }
        let r = state.radii();
        let phi = state.phases();
        let mut phase_diffs = vec![0.0; n * n];
        let mut ratios = vec![None; n * n];
        for j in 0..n {
            for k in 0..n {
                phase_diffs[j * n + k] = wrap_angle(phi[j] - phi[k]);
                if r[k] > 0.0 {
                    ratios[j * n + k] = Some(r[j] / r[k]);
                }
            }
        }
        let mean_phase = phi.iter().sum::<f64>() / n as f64;
        let amp_gap = (n == 2).then(|| r[0] * r[0] - r[1] * r[1]);
        Ok(Self {
            n,
            phase_diffs,
            ratios,
            mean_phase,
            amp_gap,
            a_het: params.a_het(),
            g_het: params.g_het(),
        })
    }

    pub fn phase_diff(&self, j: usize, k: usize) -> f64 {
        self.phase_diffs[j * self.n + k]
    }

    pub fn ratio(&self, j: usize, k: usize) -> Option<f64> {
        self.ratios[j * self.n + k]
    }
}

/// Time-stamped state sequence plus derived observable series.
///
/// `phases_unwrapped` accumulates each oscillator's phase without wrapping,
/// so full rotations stay visible to the regime detectors. Once any amplitude
/// drops below [`PHASE_FLOOR`], phases are frozen at their last valid value
/// and `frozen_from` records the first affected sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EnsembleState>,
    pub observables: Vec<Observables>,
    pub phases_unwrapped: Vec<Vec<f64>>,
    pub frozen_from: Option<usize>,
    pub params: OscillatorParams,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        let m = self.times.len();
        if self.states.len() != m || self.observables.len() != m || self.phases_unwrapped.len() != m
        {
            return Err(SlError::Contract("trajectory field lengths differ".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SlError::Contract("trajectory times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    /// Index of the last sample whose phases are still valid.
    pub fn last_valid(&self) -> usize {
        match self.frozen_from {
            Some(0) => 0,
            Some(k) => k - 1,
            None => self.len() - 1,
        }
    }

    /// Sample indices covering the final `hold` time units ending at the last
    /// phase-valid sample. Returns `None` if the valid span is shorter than
    /// `hold`.
    pub fn tail_window(&self, hold: f64) -> Option<std::ops::RangeInclusive<usize>> {
        let hi = self.last_valid();
        let t_hi = self.times[hi];
        let t_lo = t_hi - hold;
        if t_lo < self.times[0] {
            return None;
        }
        let lo = self.times.partition_point(|&t| t < t_lo);
        Some(lo..=hi)
    }

    /// Unwrapped pairwise phase difference series `phi_j - phi_k`.
    pub fn unwrapped_diff(&self, j: usize, k: usize) -> Vec<f64> {
        self.phases_unwrapped
            .iter()
            .map(|p| p[j] - p[k])
            .collect()
    }
}

/// Evaluate the Cartesian vector field `dz_j/dt`.
pub fn rhs_cartesian(state: &EnsembleState, params: &OscillatorParams) -> Result<Vec<Complex64>> {
    if state.n() != params.n() {
        return Err(SlError::Contract(format!(
            "state dimension {} does not match params dimension {}",
            state.n(),
            params.n()
        )));
    }
    Ok(rhs_cartesian_unchecked(state.z(), params))
}

/// Hot-path variant used by the integrator: dimensions already checked.
pub(crate) fn rhs_cartesian_unchecked(z: &[Complex64], params: &OscillatorParams) -> Vec<Complex64> {
    let n = z.len();
    let mean = z.iter().sum::<Complex64>() / n as f64;
    let kappa = params.kappa();
    z.iter()
        .enumerate()
        .map(|(j, &zj)| {
            let lin = Complex64::new(params.alpha()[j] - zj.norm_sqr(), params.omega()[j]);
            lin * zj + kappa * (mean - zj)
        })
        .collect()
}

/// Evaluate the polar split `(dr_j, dphi_j)`. Every `r_j` must be positive;
/// the polar form is singular at the origin.
pub fn rhs_polar(r: &[f64], phi: &[f64], params: &OscillatorParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = params.n();
    if r.len() != n || phi.len() != n {
        return Err(SlError::Contract("r/phi dimensions do not match params".into()));
    }
    if r.iter().any(|&ri| ri <= 0.0) {
        return Err(SlError::Domain("rhs_polar requires all r_j > 0".into()));
    }
    let kappa = params.kappa();
    let mut dr = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    for j in 0..n {
        let mut cr = 0.0;
        let mut cphi = 0.0;
        for l in 0..n {
            let d = phi[l] - phi[j];
            cr += r[l] * d.cos() - r[j];
            cphi += r[l] / r[j] * d.sin();
        }
        dr[j] = (params.alpha()[j] - r[j] * r[j]) * r[j] + kappa / n as f64 * cr;
        dphi[j] = params.omega()[j] + kappa / n as f64 * cphi;
    }
    Ok((dr, dphi))
}

/// Amplitude-weighted mean frequency `w = sum(omega_j r_j^2) / sum(r_j^2)`.
pub fn mean_rotation(params: &OscillatorParams, r: &[f64]) -> Result<f64> {
    if r.len() != params.n() {
        return Err(SlError::Contract("r dimension does not match params".into()));
    }
    let denom: f64 = r.iter().map(|&ri| ri * ri).sum();
    if denom <= 0.0 {
        return Err(SlError::Domain("co-rotating frame undefined: all amplitudes vanish".into()));
    }
    let num: f64 = r.iter().zip(params.omega()).map(|(&ri, &wi)| wi * ri * ri).sum();
    Ok(num / denom)
}

/// Shift into the frame rotating at the amplitude-weighted mean frequency:
/// `omega_j -> omega_j - w`. The returned parameters have `w = 0` (to 1e-12).
pub fn corotating_shift(params: &OscillatorParams, r: &[f64]) -> Result<OscillatorParams> {
    let w = mean_rotation(params, r)?;
    let omega = params.omega().iter().map(|&wi| wi - w).collect();
    OscillatorParams::new(params.kappa(), params.alpha().to_vec(), omega)
}

/// Search for a unit direction `l` with `l . z_j > 0` for every oscillator,
/// i.e. an open half-plane containing the whole ensemble.
///
/// The 2-D half-plane condition reduces to a circular gap test: sort the
/// angles and look for an empty arc wider than `pi`. Returns the bisector of
/// the occupied arc, or `None` when no strict sector exists (including when
/// some `z_j = 0`).
pub fn sector_functional(state: &EnsembleState) -> Option<(f64, f64)> {
    let z = state.z();
    if z.iter().any(|v| v.norm() == 0.0) {
        return None;
    }
    let mut angles: Vec<f64> = z.iter().map(|v| v.im.atan2(v.re)).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = angles.len();
    let tau = std::f64::consts::TAU;
    let mut best_gap = f64::NEG_INFINITY;
    let mut gap_start = 0.0;
    for i in 0..n {
        let next = if i + 1 == n { angles[0] + tau } else { angles[i + 1] };
        let gap = next - angles[i];
        if gap > best_gap {
            best_gap = gap;
            gap_start = angles[i];
        }
    }
    if best_gap <= std::f64::consts::PI {
        return None;
    }
    let dir = gap_start + best_gap / 2.0 + std::f64::consts::PI;
    Some((dir.cos(), dir.sin()))
}
