//! General-N results for identical natural frequencies (`omega_j = 0`):
//! amplitude-death stability conditions, the active fixed point of the
//! amplitude dynamics, the ensemble Jacobian, and synchronization
//! diagnostics on trajectories.
//!
//! With phases synchronized the amplitudes follow
//!
//! ```text
//! dr_j/dt = (alpha_j - r_j^2) r_j + (kappa/N) sum_l (r_l - r_j)
//! ```
//!
//! which is the (negative) gradient flow of the potential
//! `P(r) = (kappa/4N) sum_{ij} (r_i - r_j)^2 + (1/4) sum r_i^4
//!        - (1/2) sum alpha_i r_i^2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlError};
use crate::integrator::fit_decay_rate;
use crate::model::Trajectory;

/// Outcome of the three amplitude-death stability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdVerdict {
    /// `sum alpha_j < 0`.
    pub cond_sum_neg: bool,
    /// `kappa > alpha_j` for every `j`.
    pub cond_kappa_dominates: bool,
    /// `sum alpha_j / (kappa - alpha_j) < 0`; only meaningful when the
    /// previous condition holds.
    pub cond_weighted_neg: bool,
    /// The weighted sum was actually evaluable (`kappa > alpha_j` held).
    pub weighted_defined: bool,
    /// Conjunction of the three conditions.
    pub ad_stable: bool,
}

/// Evaluate the amplitude-death conditions for the zero fixed point.
pub fn ad_conditions(alphas: &[f64], kappa: f64) -> AdVerdict {
    assert!(kappa > 0.0, "kappa must be positive");
    let cond_sum_neg = alphas.iter().sum::<f64>() < 0.0;
    let cond_kappa_dominates = alphas.iter().all(|&a| kappa > a);
    let (cond_weighted_neg, weighted_defined) = if cond_kappa_dominates {
        let s: f64 = alphas.iter().map(|&a| a / (kappa - a)).sum();
        (s < 0.0, true)
    } else {
        (false, false)
    };
    AdVerdict {
        cond_sum_neg,
        cond_kappa_dominates,
        cond_weighted_neg,
        weighted_defined,
        ad_stable: cond_sum_neg && cond_kappa_dominates && cond_weighted_neg,
    }
}

/// Weighted sum `sum alpha_j / (kappa - alpha_j)`; its root in `kappa` is
/// the sharp death threshold.
pub fn weighted_alpha_sum(alphas: &[f64], kappa: f64) -> Option<f64> {
    if alphas.iter().any(|&a| kappa <= a) {
        return None;
    }
    Some(alphas.iter().map(|&a| a / (kappa - a)).sum())
}

/// Jacobian `G - (kappa/N) 1 1^T` of the (sign-flipped) amplitude
/// fixed-point map, with `g_j = kappa + 3 r_j^2 - alpha_j`.
pub fn ensemble_jacobian(r: &[f64], alphas: &[f64], kappa: f64) -> DMatrix<f64> {
    let n = r.len();
    let mut m = DMatrix::from_element(n, n, -kappa / n as f64);
    for j in 0..n {
        m[(j, j)] += kappa + 3.0 * r[j] * r[j] - alphas[j];
    }
    m
}

/// Determinant of the ensemble Jacobian through the rank-one identity
/// `prod g_j (1 - (kappa/N) sum 1/g_j)`. When some `g_j` vanishes the
/// product form is singular and the dense determinant is used instead; the
/// flag in the result reports that fallback.
pub fn ensemble_jacobian_det(r: &[f64], alphas: &[f64], kappa: f64) -> Result<(f64, bool)> {
    let n = r.len();
    if alphas.len() != n || n == 0 {
        return Err(SlError::Contract("r and alphas must have equal nonzero length".into()));
    }
    let g: Vec<f64> = (0..n).map(|j| kappa + 3.0 * r[j] * r[j] - alphas[j]).collect();
    if g.iter().any(|&gj| gj.abs() < 1e-12) {
        let det = ensemble_jacobian(r, alphas, kappa).lu().determinant();
        return Ok((det, true));
    }
    let prod: f64 = g.iter().product();
    let sum: f64 = g.iter().map(|gj| 1.0 / gj).sum();
    Ok((prod * (1.0 - kappa / n as f64 * sum), false))
}

/// The unique active fixed point of the synchronized amplitude dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveFixedPoint {
    pub r_inf: Vec<f64>,
    pub residual_norm: f64,
    pub stable: bool,
}

/// Fixed-point map `F(r)_j = kappa r_j - (kappa/N) sum r_l + (r_j^2 - alpha_j) r_j`
/// (the negated amplitude field, so stability means positive-definite Jacobian).
pub fn fixed_point_map(r: &[f64], alphas: &[f64], kappa: f64) -> Vec<f64> {
    let n = r.len();
    let mean: f64 = r.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|j| kappa * r[j] - kappa * mean + (r[j] * r[j] - alphas[j]) * r[j])
        .collect()
}

/// Solve for the active fixed point, or report `None` when the death
/// verdict applies.
///
/// Damped Newton seeded from `r_j = sqrt(max(alpha_j, eps0))` with
/// positivity projection, falling back to relaxation along the amplitude
/// flow when Newton stalls.
pub fn active_fixed_point(alphas: &[f64], kappa: f64) -> Result<Option<ActiveFixedPoint>> {
    if alphas.is_empty() {
        return Err(SlError::Contract("need at least one oscillator".into()));
    }
    if !(kappa > 0.0) {
        return Err(SlError::Contract("kappa must be positive".into()));
    }
    if ad_conditions(alphas, kappa).ad_stable {
        return Ok(None);
    }
    let alpha_plus = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps0 = 0.05 * alpha_plus.max(0.0).sqrt().max(1.0);
    let seed: Vec<f64> = alphas.iter().map(|&a| a.max(eps0).sqrt()).collect();

    let solution = newton_positive(&seed, alphas, kappa)
        .or_else(|| {
            let relaxed = relax_to_stationary(&seed, alphas, kappa)?;
            newton_positive(&relaxed, alphas, kappa).or(Some(relaxed))
        })
        .ok_or_else(|| {
            SlError::NoConvergence(format!(
                "active fixed point not found for alphas = {alphas:?}, kappa = {kappa}"
            ))
        })?;

    let residual_norm = fixed_point_map(&solution, alphas, kappa)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if residual_norm >= 1e-10 {
        return Err(SlError::NoConvergence(format!(
            "active fixed point residual {residual_norm:.3e} too large"
        )));
    }
    let jac = ensemble_jacobian(&solution, alphas, kappa);
    let eigs = jac.symmetric_eigenvalues();
    let stable = eigs.iter().all(|&e| e > 0.0);
    let fp = ActiveFixedPoint { r_inf: solution, residual_norm, stable };
    check_fixed_point_invariants(&fp, alphas)?;
    Ok(Some(fp))
}

fn check_fixed_point_invariants(fp: &ActiveFixedPoint, alphas: &[f64]) -> Result<()> {
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&i, &j| alphas[i].partial_cmp(&alphas[j]).unwrap());
    let sorted_r: Vec<f64> = order.iter().map(|&i| fp.r_inf[i]).collect();
    if sorted_r.windows(2).any(|w| w[1] < w[0] - 1e-9) {
        return Err(SlError::Internal(format!(
            "amplitude ordering violated: {sorted_r:?}"
        )));
    }
    if alphas.iter().all(|&a| a > 0.0) {
        let lo = alphas.iter().cloned().fold(f64::INFINITY, f64::min).sqrt();
        let hi = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max).sqrt();
        if fp.r_inf.iter().any(|&r| r < lo - 1e-9 || r > hi + 1e-9) {
            return Err(SlError::Internal(format!(
                "amplitudes escape [min sqrt(alpha), max sqrt(alpha)]: {:?}",
                fp.r_inf
            )));
        }
    }
    Ok(())
}

fn newton_positive(seed: &[f64], alphas: &[f64], kappa: f64) -> Option<Vec<f64>> {
    let n = seed.len();
    let mut r = seed.to_vec();
    let mut res = DVector::from_vec(fixed_point_map(&r, alphas, kappa));
    for _ in 0..200 {
        if res.amax() < 1e-12 {
            return Some(r);
        }
        let jac = ensemble_jacobian(&r, alphas, kappa);
        let delta = jac.lu().solve(&(-&res))?;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> =
                (0..n).map(|j| (r[j] + step * delta[j]).max(1e-12)).collect();
            let cres = DVector::from_vec(fixed_point_map(&cand, alphas, kappa));
            if cres.amax() < res.amax() {
                r = cand;
                res = cres;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            return None;
        }
    }
    (res.amax() < 1e-12).then_some(r)
}

/// Follow the amplitude flow until it is stationary; explicit Euler with an
/// adaptive cap is enough because the flow is a gradient descent.
fn relax_to_stationary(seed: &[f64], alphas: &[f64], kappa: f64) -> Option<Vec<f64>> {
    let n = seed.len();
    let mut r = seed.to_vec();
    let cap = 0.05 / (1.0 + kappa + alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())));
    for _ in 0..2_000_000 {
        let f = fixed_point_map(&r, alphas, kappa);
        let amax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if amax < 1e-11 {
            return Some(r);
        }
        for j in 0..n {
            r[j] = (r[j] - cap * f[j]).max(1e-12);
        }
    }
    None
}

/// Multistart uniqueness probe: every Newton run from `n_starts` random
/// positive seeds must land on the same point (within 1e-8). Intended for
/// small ensembles.
pub fn verify_uniqueness_multistart(
    alphas: &[f64],
    kappa: f64,
    n_starts: usize,
    seed: u64,
) -> Result<bool> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let reference = match active_fixed_point(alphas, kappa)? {
        Some(fp) => fp.r_inf,
        None => return Ok(true),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let hi = alphas.iter().fold(1.0f64, |m, a| m.max(a.abs())).sqrt() * 2.0;
    for _ in 0..n_starts {
        let start: Vec<f64> = (0..alphas.len()).map(|_| rng.gen_range(1e-3..hi)).collect();
        if let Some(sol) = newton_positive(&start, alphas, kappa) {
            // Runs that collapse onto the death state do not contradict
            // uniqueness of the *active* point.
            if sol.iter().all(|&r| r < 1e-6) {
                continue;
            }
            let dist = sol
                .iter()
                .zip(&reference)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if dist > 1e-8 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Potential `P(r)` of the synchronized amplitude dynamics.
pub fn potential(r: &[f64], alphas: &[f64], kappa: f64) -> f64 {
    let n = r.len();
    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            pair += (r[i] - r[j]) * (r[i] - r[j]);
        }
    }
    kappa / (4.0 * n as f64) * pair
        + r.iter().map(|&ri| 0.25 * ri.powi(4)).sum::<f64>()
        - r.iter().zip(alphas).map(|(&ri, &ai)| 0.5 * ai * ri * ri).sum::<f64>()
}

/// Analytic gradient of [`potential`]; equals the negated amplitude field.
pub fn potential_gradient(r: &[f64], alphas: &[f64], kappa: f64) -> Vec<f64> {
    fixed_point_map(r, alphas, kappa)
}

/// Synchronization diagnostic on a trajectory: the series
/// `max_{jk} (1 - cos Phi_jk)` and its fitted exponential rate over the
/// mid-window `[0.2, 0.6] * t_end` (auto-shortened above the floating-point
/// floor).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncDiagnostic {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rate: f64,
    pub window: (f64, f64),
    pub truncated: bool,
}

pub fn sync_diagnostic(traj: &Trajectory) -> Result<SyncDiagnostic> {
    let n = traj.params.n();
    if traj.params.omega().iter().any(|&w| w != 0.0) {
        return Err(SlError::Contract("sync diagnostic requires omega = 0".into()));
    }
    if crate::model::sector_functional(&traj.states[0]).is_none() {
        return Err(SlError::Contract(
            "sync diagnostic requires strictly sectorial initial data".into(),
        ));
    }
    let mut times = Vec::with_capacity(traj.len());
    let mut values = Vec::with_capacity(traj.len());
    for (i, obs) in traj.observables.iter().enumerate() {
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in (j + 1)..n {
                worst = worst.max(1.0 - obs.phase_diff(j, k).cos());
            }
        }
        times.push(traj.times[i]);
        values.push(worst);
    }
    let t_end = traj.t_end();
    let (mut w_lo, mut w_hi) = (0.2 * t_end, 0.6 * t_end);
    const FLOOR: f64 = 1e-28;
    // Shorten the window if the series hits the floor inside it.
    let mut truncated = false;
    for (t, v) in times.iter().zip(&values) {
        if *t >= w_lo && *t <= w_hi && *v <= FLOOR {
            w_hi = *t;
            truncated = true;
            break;
        }
    }
    if w_hi <= w_lo {
        w_lo = w_hi / 2.0;
    }
    let (mut fts, mut fvs) = (Vec::new(), Vec::new());
    for (t, v) in times.iter().zip(&values) {
        if *t >= w_lo && *t <= w_hi && *v > FLOOR {
            fts.push(*t);
            fvs.push(*v);
        }
    }
    if fts.len() < 2 {
        // Already synchronized to the floating-point floor before the
        // window: report a flat rate rather than failing.
        return Ok(SyncDiagnostic { times, values, rate: 0.0, window: (w_lo, w_hi), truncated: true });
    }
    let rate = fit_decay_rate(&fts, &fvs)?;
    Ok(SyncDiagnostic { times, values, rate, window: (w_lo, w_hi), truncated })
}

/// Observed bounds of all amplitude ratios along a trajectory.
pub fn ratio_bounds_check(traj: &Trajectory) -> Result<(f64, f64)> {
    let n = traj.params.n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, obs) in traj.observables.iter().enumerate() {
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                match obs.ratio(j, k) {
                    Some(v) => {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    None => {
                        return Err(SlError::Diagnostic {
                            t: traj.times[i],
                            reason: format!("undefined ratio R_{j}{k}"),
                        })
                    }
                }
            }
        }
    }
    Ok((lo, hi))
}
