//! The real-line reduction
//!
//! ```text
//! dx_j/dt = (alpha_j - x_j^2) x_j + (kappa/N) sum_l (x_l - x_j)
//! ```
//!
//! read as a nonlinear opinion model: `alpha_j > 0` are stubborn agents
//! anchored near `+-sqrt(alpha_j)`, `alpha_j <= 0` agreeable ones pulled to
//! zero. The module enumerates fixed points with a stability taxonomy,
//! pins the two-agent bifurcation values, and traces branches in the
//! coupling with pseudo-arclength continuation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlError};

/// Eigenvalue sign pattern of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityKind {
    Stable,
    Saddle,
    Unstable,
    /// Some eigenvalue sits within 1e-8 of zero: a bifurcation point, not
    /// forced into a bucket.
    Marginal,
}

/// Sign-pattern taxonomy of an asymptotic opinion profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpinionOutcome {
    Disagreement,
    Compromise,
    Consensus,
    BalancedConsensus,
    /// Mixed zero/nonzero patterns that fit none of the four definitions
    /// (only reachable for degenerate points such as the uncoupled saddles).
    Degenerate,
}

/// A fixed point of the opinion dynamics with its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionFixedPoint {
    pub x: Vec<f64>,
    pub kind: StabilityKind,
    pub taxonomy: OpinionOutcome,
}

/// Right-hand side of the opinion dynamics.
pub fn opinion_field(x: &[f64], alphas: &[f64], kappa: f64) -> Vec<f64> {
    let n = x.len();
    let mean: f64 = x.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|j| (alphas[j] - x[j] * x[j]) * x[j] + kappa * (mean - x[j]))
        .collect()
}

/// Jacobian `A - E` with `A = diag(alpha_j - 3 x_j^2)` and
/// `E = (kappa/N)(N I - 1 1^T)`; symmetric, so the spectrum is real.
pub fn opinion_jacobian(x: &[f64], alphas: &[f64], kappa: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut m = DMatrix::from_element(n, n, kappa / n as f64);
    for j in 0..n {
        m[(j, j)] = alphas[j] - 3.0 * x[j] * x[j] - kappa * (n as f64 - 1.0) / n as f64;
    }
    m
}

const MARGINAL_TOL: f64 = 1e-8;

fn classify_kind(x: &[f64], alphas: &[f64], kappa: f64) -> StabilityKind {
    let eigs = opinion_jacobian(x, alphas, kappa).symmetric_eigenvalues();
    if eigs.iter().any(|e| e.abs() <= MARGINAL_TOL) {
        StabilityKind::Marginal
    } else if eigs.iter().all(|&e| e < 0.0) {
        StabilityKind::Stable
    } else if eigs.iter().all(|&e| e > 0.0) {
        StabilityKind::Unstable
    } else {
        StabilityKind::Saddle
    }
}

/// Sign-pattern taxonomy with a 1e-9 zero/equality tolerance.
pub fn classify_outcome(x: &[f64]) -> OpinionOutcome {
    const TOL: f64 = 1e-9;
    let any_pos = x.iter().any(|&v| v > TOL);
    let any_neg = x.iter().any(|&v| v < -TOL);
    let all_zero = x.iter().all(|&v| v.abs() <= TOL);
    if all_zero {
        return OpinionOutcome::BalancedConsensus;
    }
    if any_pos && any_neg {
        return OpinionOutcome::Disagreement;
    }
    let all_equal = x.iter().all(|&v| (v - x[0]).abs() <= TOL);
    if all_equal {
        return OpinionOutcome::Consensus;
    }
    let strict_pos = x.iter().all(|&v| v > TOL);
    let strict_neg = x.iter().all(|&v| v < -TOL);
    if strict_pos || strict_neg {
        OpinionOutcome::Compromise
    } else {
        OpinionOutcome::Degenerate
    }
}

/// Exhaustively enumerate fixed points by seeding Newton from a
/// `grid_per_dim^n` lattice over `[-search_radius, search_radius]^n`.
/// Roots are deduplicated at distance 1e-6 and sorted lexicographically.
pub fn enumerate_fixed_points(
    alphas: &[f64],
    kappa: f64,
    search_radius: f64,
    grid_per_dim: usize,
) -> Result<Vec<OpinionFixedPoint>> {
    let n = alphas.len();
    if n == 0 || n > 6 {
        return Err(SlError::Contract("exhaustive enumeration supports 1 <= n <= 6".into()));
    }
    let needed = 2.0 * alphas.iter().fold(1.0f64, |m, a| m.max(a.abs().sqrt()));
    if search_radius < needed {
        return Err(SlError::Contract(format!(
            "search_radius {search_radius} below required {needed}"
        )));
    }
    if grid_per_dim < 2 {
        return Err(SlError::Contract("grid_per_dim must be at least 2".into()));
    }
    let total = grid_per_dim.pow(n as u32);
    // Seeds are independent tasks; the merge below sorts lexicographically,
    // so the result does not depend on evaluation order.
    let mut roots: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let mut seed = vec![0.0; n];
            let mut rem = flat;
            for s in seed.iter_mut() {
                let idx = rem % grid_per_dim;
                rem /= grid_per_dim;
                *s = -search_radius
                    + 2.0 * search_radius * idx as f64 / (grid_per_dim - 1) as f64;
            }
            newton_root(&seed, alphas, kappa)
                .filter(|root| root.iter().all(|v| v.abs() <= 1.5 * search_radius))
        })
        .collect();
    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // Near-tied leading components can interleave distinct roots after the
    // sort, so deduplicate against every retained root rather than only the
    // previous one.
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for root in roots {
        let known = distinct
            .iter()
            .any(|r| r.iter().zip(&root).all(|(a, b)| (a - b).abs() < 1e-6));
        if !known {
            distinct.push(root);
        }
    }
    let roots = distinct;
    Ok(roots
        .into_iter()
        .map(|x| OpinionFixedPoint {
            kind: classify_kind(&x, alphas, kappa),
            taxonomy: classify_outcome(&x),
            x,
        })
        .collect())
}

fn newton_root(seed: &[f64], alphas: &[f64], kappa: f64) -> Option<Vec<f64>> {
    let mut x = seed.to_vec();
    let mut res = DVector::from_vec(opinion_field(&x, alphas, kappa));
    for _ in 0..100 {
        if res.amax() < 1e-12 {
            return Some(x);
        }
        let jac = opinion_jacobian(&x, alphas, kappa);
        let delta = jac.lu().solve(&(-&res))?;
        if !delta.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(delta.iter()).map(|(v, d)| v + step * d).collect();
            let cres = DVector::from_vec(opinion_field(&cand, alphas, kappa));
            if cres.amax() < res.amax() {
                x = cand;
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
    (res.amax() < 1e-12).then_some(x)
}

/// The two bifurcation values of the homogeneous two-agent system:
/// a pair of triple saddle-node collisions at `2 alpha / 3` and the collapse
/// of the remaining sign-mixed pair into the origin at `alpha`.
pub fn bifurcations_n2_homog(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(SlError::Domain("bifurcation values need alpha > 0".into()));
    }
    Ok((2.0 * alpha / 3.0, alpha))
}

/// One sampled point along a continued branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub kappa: f64,
    pub x: Vec<f64>,
    pub kind: StabilityKind,
}

/// Branch samples plus detected bifurcation locations in the coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    /// Detected fold/exchange/pitchfork locations, sorted ascending.
    pub kappa_values: Vec<f64>,
    pub branch: Vec<BranchPoint>,
    /// False when continuation had to stop early after repeated step failures.
    pub complete: bool,
}

/// Pseudo-arclength continuation of a fixed-point branch in `kappa` over
/// `kappa_range`, with detection of Jacobian-singular events (folds and
/// stability exchanges) by determinant sign change, refined by bisection to
/// 1e-6 in `kappa`. On the zero branch the pitchfork is located instead as
/// the root of `sum alpha_j / (kappa - alpha_j)`.
pub fn continue_branch(
    alphas: &[f64],
    x_start: &[f64],
    kappa_range: (f64, f64),
    step: f64,
) -> Result<BifurcationReport> {
    let n = alphas.len();
    let (k0, k1) = kappa_range;
    if !(k0 > 0.0 && k1 > k0) {
        return Err(SlError::Contract("need 0 < kappa_start < kappa_end".into()));
    }
    if x_start.len() != n {
        return Err(SlError::Contract("x_start dimension mismatch".into()));
    }
    let mut x = match newton_root(x_start, alphas, k0) {
        Some(r) => r,
        None => return Err(SlError::Contract("x_start is not a fixed point at kappa_range.0".into())),
    };
    let start_res = x
        .iter()
        .zip(x_start)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if start_res > 1e-3 {
        return Err(SlError::Contract(
            "x_start too far from a fixed point at the starting coupling".into(),
        ));
    }

    // Trivial branch: handle separately to expose the pitchfork location.
    if x.iter().all(|v| v.abs() < 1e-9) {
        return continue_zero_branch(alphas, kappa_range, step);
    }

    let mut kappa = k0;
    let mut branch = vec![branch_point(&x, alphas, kappa)];
    let mut events: Vec<f64> = Vec::new();
    let mut det_prev = opinion_jacobian(&x, alphas, kappa).lu().determinant();

    // Initial tangent: prefer increasing kappa.
    let mut tangent = branch_tangent(&x, alphas, kappa, None)?;
    if tangent[n] < 0.0 {
        tangent = -tangent;
    }
    let mut dk_prev = tangent[n];

    let mut ds = step;
    let mut failures = 0;
    let mut complete = true;
    let max_points = 200_000usize;
    while kappa < k1 && branch.len() < max_points {
        let mut u = DVector::zeros(n + 1);
        for j in 0..n {
            u[j] = x[j];
        }
        u[n] = kappa;
        let pred = &u + &tangent * ds;
        match correct(&pred, &u, &tangent, alphas) {
            Some(next) => {
                failures = 0;
                let x_next: Vec<f64> = (0..n).map(|j| next[j]).collect();
                let kappa_next = next[n];
                if kappa_next <= 0.0 {
                    break;
                }
                let det = opinion_jacobian(&x_next, alphas, kappa_next).lu().determinant();
                if det_prev * det < 0.0 {
                    if let Some(kc) = refine_event(&u, &tangent, ds, alphas) {
                        events.push(kc);
                    }
                }
                det_prev = det;
                let new_tangent = branch_tangent(&x_next, alphas, kappa_next, Some(&tangent))?;
                // The branch turning in kappa (a fold, or a crossing with
                // another branch where the determinant only touches zero)
                // shows up as a sign change of the tangent's kappa component.
                if dk_prev * new_tangent[n] < 0.0 {
                    if let Some(kc) = refine_turn(&u, &tangent, ds, alphas) {
                        events.push(kc);
                    }
                }
                dk_prev = new_tangent[n];
                tangent = new_tangent;
                x = x_next;
                kappa = kappa_next;
                branch.push(branch_point(&x, alphas, kappa));
                ds = (ds * 1.3).min(step);
                // Stop when the branch has folded back out of the window
                // or collapses into the origin.
                if x.iter().all(|v| v.abs() < 1e-10) {
                    break;
                }
            }
            None => {
                ds /= 2.0;
                failures += 1;
                if failures > 10 || ds < step * 1e-6 {
                    complete = false;
                    break;
                }
            }
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-5);
    Ok(BifurcationReport { kappa_values: events, branch, complete })
}

fn branch_point(x: &[f64], alphas: &[f64], kappa: f64) -> BranchPoint {
    BranchPoint { kappa, x: x.to_vec(), kind: classify_kind(x, alphas, kappa) }
}

/// Tangent of the solution curve of `F(x, kappa) = 0` in `(x, kappa)`,
/// normalized and oriented along the previous tangent when given.
fn branch_tangent(
    x: &[f64],
    alphas: &[f64],
    kappa: f64,
    prev: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let n = x.len();
    let mut bordered = DMatrix::zeros(n + 1, n + 1);
    let jac = opinion_jacobian(x, alphas, kappa);
    let fk = dfield_dkappa(x);
    for i in 0..n {
        for j in 0..n {
            bordered[(i, j)] = jac[(i, j)];
        }
        bordered[(i, n)] = fk[i];
    }
    match prev {
        Some(t) => {
            for j in 0..=n {
                bordered[(n, j)] = t[j];
            }
        }
        None => bordered[(n, n)] = 1.0,
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = bordered
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SlError::NoConvergence("tangent system singular".into()))?;
    let norm = t.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SlError::NoConvergence("degenerate branch tangent".into()));
    }
    Ok(t / norm)
}

fn dfield_dkappa(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean: f64 = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|&xj| mean - xj).collect()
}

/// Newton corrector for the augmented system
/// `[F(x, kappa); (u - u_prev) . t_prev - ds] = 0`, with the arclength
/// constraint already absorbed in the predictor (we keep the hyperplane
/// through the predicted point).
fn correct(
    pred: &DVector<f64>,
    _u_prev: &DVector<f64>,
    tangent: &DVector<f64>,
    alphas: &[f64],
) -> Option<DVector<f64>> {
    let n = alphas.len();
    let mut u = pred.clone();
    for _ in 0..25 {
        let x: Vec<f64> = (0..n).map(|j| u[j]).collect();
        let kappa = u[n];
        if kappa <= 0.0 {
            return None;
        }
        let f = opinion_field(&x, alphas, kappa);
        let plane: f64 = (0..=n).map(|j| (u[j] - pred[j]) * tangent[j]).sum();
        let mut res_norm = plane.abs();
        for v in &f {
            res_norm = res_norm.max(v.abs());
        }
        if res_norm < 1e-11 {
            return Some(u);
        }
        let jac = opinion_jacobian(&x, alphas, kappa);
        let fk = dfield_dkappa(&x);
        let mut sys = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                sys[(i, j)] = jac[(i, j)];
            }
            sys[(i, n)] = fk[i];
            rhs[i] = -f[i];
        }
        for j in 0..=n {
            sys[(n, j)] = tangent[j];
        }
        rhs[n] = -plane;
        let delta = sys.lu().solve(&rhs)?;
        u += delta;
        if !u.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

/// Bisect the arclength segment on which the Jacobian determinant changes
/// sign; returns the critical coupling to 1e-6.
fn refine_event(
    u_prev: &DVector<f64>,
    tangent: &DVector<f64>,
    ds: f64,
    alphas: &[f64],
) -> Option<f64> {
    let n = alphas.len();
    let det_at = |s: f64| -> Option<(f64, f64)> {
        let pred = u_prev + tangent * s;
        let u = correct(&pred, u_prev, tangent, alphas)?;
        let x: Vec<f64> = (0..n).map(|j| u[j]).collect();
        Some((opinion_jacobian(&x, alphas, u[n]).lu().determinant(), u[n]))
    };
    let (mut lo, mut hi) = (0.0, ds);
    let (d_lo, _) = det_at(lo)?;
    let mut kappa_mid = det_at(hi)?.1;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (d_mid, k_mid) = det_at(mid)?;
        kappa_mid = k_mid;
        if d_lo * d_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        let (_, k_lo) = det_at(lo)?;
        let (_, k_hi) = det_at(hi)?;
        if (k_hi - k_lo).abs() < 1e-7 {
            break;
        }
    }
    Some(kappa_mid)
}

/// Bisect the arclength segment over which `dkappa/ds` changes sign;
/// returns the extremal coupling (the turning point) to 1e-6.
fn refine_turn(
    u_prev: &DVector<f64>,
    tangent: &DVector<f64>,
    ds: f64,
    alphas: &[f64],
) -> Option<f64> {
    let n = alphas.len();
    let dk_at = |s: f64| -> Option<(f64, f64)> {
        let pred = u_prev + tangent * s;
        let u = correct(&pred, u_prev, tangent, alphas)?;
        let x: Vec<f64> = (0..n).map(|j| u[j]).collect();
        let t = branch_tangent(&x, alphas, u[n], Some(tangent)).ok()?;
        Some((t[n], u[n]))
    };
    let (mut lo, mut hi) = (0.0, ds);
    let (d_lo, _) = dk_at(lo)?;
    let mut kappa_mid = dk_at(hi)?.1;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (d_mid, k_mid) = dk_at(mid)?;
        kappa_mid = k_mid;
        if d_lo * d_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < ds * 1e-12 {
            break;
        }
        let (_, k_lo) = dk_at(lo)?;
        let (_, k_hi) = dk_at(hi)?;
        if (k_hi - k_lo).abs() < 1e-9 {
            break;
        }
    }
    Some(kappa_mid)
}

/// Continuation restricted to the zero branch `x = 0`: the branch itself is
/// exact, and the reported event is the pitchfork where
/// `sum alpha_j / (kappa - alpha_j)` crosses zero.
fn continue_zero_branch(
    alphas: &[f64],
    kappa_range: (f64, f64),
    step: f64,
) -> Result<BifurcationReport> {
    let n = alphas.len();
    let (k0, k1) = kappa_range;
    let mut branch = Vec::new();
    let mut kappa = k0;
    while kappa <= k1 {
        branch.push(branch_point(&vec![0.0; n], alphas, kappa));
        kappa += step.max(1e-4);
    }
    let mut events = Vec::new();
    if let Some(kc) = pitchfork_root(alphas, k0, k1) {
        events.push(kc);
    }
    Ok(BifurcationReport { kappa_values: events, branch, complete: true })
}

fn pitchfork_root(alphas: &[f64], k_lo: f64, k_hi: f64) -> Option<f64> {
    let alpha_max = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = k_lo.max(alpha_max + 1e-9);
    if lo >= k_hi {
        return None;
    }
    let s = |k: f64| crate::ensemble::weighted_alpha_sum(alphas, k).unwrap();
    let (mut a, mut b) = (lo, k_hi);
    let (sa, sb) = (s(a), s(b));
    if sa * sb > 0.0 {
        return None;
    }
    let mut fa = sa;
    while b - a > 1e-9 {
        let m = 0.5 * (a + b);
        let fm = s(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

/// The proven coupling bound for the disappearance of disagreement states
/// (`max_j alpha_j`, or 0 when all agents are agreeable), together with the
/// final pitchfork location when the average is subcritical.
pub fn kappa_star_bounds(alphas: &[f64]) -> (f64, Option<f64>) {
    let alpha_max = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bound = alpha_max.max(0.0);
    let sum: f64 = alphas.iter().sum();
    let pitchfork = if sum < 0.0 && alpha_max > 0.0 {
        // The weighted sum diverges to +inf at kappa -> alpha_max ^+ and tends
        // to 0^- at infinity, so the root exists and is unique.
        pitchfork_root(alphas, alpha_max + 1e-9, 1e6)
    } else {
        None
    };
    (bound, pitchfork)
}
