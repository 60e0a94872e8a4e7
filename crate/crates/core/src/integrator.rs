//! Adaptive embedded Runge-Kutta integration of the coupled system in
//! Cartesian coordinates, plus trajectory-based detection of the four
//! asymptotic regimes.
//!
//! Integration happens in Cartesian form because the polar split is singular
//! at `r_j = 0`, which amplitude-death runs approach; polar observables are
//! derived after the fact. The scheme is the Dormand-Prince 5(4) pair with
//! standard step-size control.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlError};
use crate::model::{
    rhs_cartesian_unchecked, wrap_angle, EnsembleState, Observables, OscillatorParams, Trajectory,
    PHASE_FLOOR,
};

/// Default threshold for declaring amplitude death.
pub const AD_EPS: f64 = 1e-6;
/// Default drift bound for declaring phase locking.
pub const LOCK_TOL: f64 = 1e-4;
/// Default duration a condition must hold in the trajectory tail.
pub const HOLD: f64 = 20.0;
/// Amplitudes above `10 * AD_EPS` in the whole tail window count as active.
pub const ACTIVE_FLOOR: f64 = 10.0 * AD_EPS;

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub sample_dt: f64,
    pub seed: u64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 0.5,
            sample_dt: 0.05,
            seed: 0,
        }
    }
}

impl IntegrateOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SlError::Contract(format!("t_end must be positive, got {}", self.t_end)));
        }
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(SlError::Contract(format!("{name} must be in (0, 1e-2], got {v}")));
            }
        }
        if !(self.max_step > 0.0) || !(self.sample_dt > 0.0) {
            return Err(SlError::Contract("max_step and sample_dt must be positive".into()));
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Amplitude part of an asymptotic classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmplitudeRegime {
    Active,
    AmplitudeDeath,
    Undetermined,
}

/// Phase part of an asymptotic classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseRegime {
    PhaseLocked,
    Incoherent,
    Undetermined,
}

/// One of the asymptotic classifications, plus boundary/leader markers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub amplitude: AmplitudeRegime,
    pub phase: PhaseRegime,
    pub leader_driven: bool,
    pub boundary: bool,
}

impl RegimeLabel {
    pub fn new(amplitude: AmplitudeRegime, phase: PhaseRegime) -> Self {
        Self { amplitude, phase, leader_driven: false, boundary: false }
    }

    pub fn with_leader(mut self, leader: bool) -> Self {
        // A leader-driven state is by definition active and locked.
        debug_assert!(
            !leader
                || (self.amplitude == AmplitudeRegime::Active
                    && self.phase == PhaseRegime::PhaseLocked)
        );
        self.leader_driven = leader;
        self
    }

    pub fn with_boundary(mut self, boundary: bool) -> Self {
        self.boundary = boundary;
        self
    }

    /// Amplitude and phase labels agree (flags are metadata, not classes).
    pub fn same_class(&self, other: &RegimeLabel) -> bool {
        self.amplitude == other.amplitude && self.phase == other.phase
    }
}

// Dormand-Prince 5(4) tableau (stage times are not needed: the system is
// autonomous).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Dopri<'a> {
    params: &'a OscillatorParams,
    rtol: f64,
    atol: f64,
}

impl Dopri<'_> {
    /// One trial step from `(t, y)` with stage-1 slope `k1` already known.
    /// Returns `(y_new, k_last, err_norm)`.
    fn step(
        &self,
        _t: f64,
        y: &[Complex64],
        k1: &[Complex64],
        h: f64,
    ) -> (Vec<Complex64>, Vec<Complex64>, f64) {
        let n = y.len();
        let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
        k.push(k1.to_vec());
        let mut scratch = vec![Complex64::default(); n];
        for s in 1..7 {
            for (j, slot) in scratch.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for (m, km) in k.iter().enumerate() {
                    let a = A[s - 1][m];
                    if a != 0.0 {
                        acc += a * km[j];
                    }
                }
                *slot = y[j] + h * acc;
            }
            k.push(rhs_cartesian_unchecked(&scratch, self.params));
        }
        let mut y_new = vec![Complex64::default(); n];
        let mut err = 0.0;
        for j in 0..n {
            let mut acc5 = Complex64::default();
            let mut acc_err = Complex64::default();
            for s in 0..7 {
                if B5[s] != 0.0 {
                    acc5 += B5[s] * k[s][j];
                }
                let d = B5[s] - B4[s];
                if d != 0.0 {
                    acc_err += d * k[s][j];
                }
            }
            y_new[j] = y[j] + h * acc5;
            let e = h * acc_err;
            for (ec, y0c, y1c) in [(e.re, y[j].re, y_new[j].re), (e.im, y[j].im, y_new[j].im)] {
                let scale = self.atol + self.rtol * y0c.abs().max(y1c.abs());
                let r = ec / scale;
                err += r * r;
            }
        }
        let err_norm = (err / (2.0 * n as f64)).sqrt();
        (y_new, k.pop().unwrap(), err_norm)
    }
}

/// Integrate the coupled system, sampling every `opts.sample_dt` up to
/// `opts.t_end`. Deterministic for fixed inputs. On step-size underflow the
/// error carries the partial trajectory.
pub fn integrate(
    params: &OscillatorParams,
    z0: &EnsembleState,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    if z0.n() != params.n() {
        return Err(SlError::Contract(format!(
            "initial state dimension {} does not match params dimension {}",
            z0.n(),
            params.n()
        )));
    }

    let stepper = Dopri { params, rtol: opts.rtol, atol: opts.atol };
    let n_samples = (opts.t_end / opts.sample_dt).floor() as usize;
    let mut sample_times: Vec<f64> = (0..=n_samples).map(|k| k as f64 * opts.sample_dt).collect();
    if opts.t_end - sample_times[n_samples] > 1e-12 * opts.t_end {
        sample_times.push(opts.t_end);
    }

    let mut traj = TrajectoryBuilder::new(params.clone());
    let mut t = 0.0;
    let mut y = z0.z().to_vec();
    traj.push(t, &y)?;

    let mut k1 = rhs_cartesian_unchecked(&y, params);
    let mut h = (opts.sample_dt / 4.0).min(opts.max_step);
    let mut next_sample = 1;

    while next_sample < sample_times.len() {
        let t_target = sample_times[next_sample];
        let h_to_target = t_target - t;
        let mut h_try = h.min(opts.max_step).min(h_to_target);
        let hit_sample = h_try >= h_to_target - 1e-14 * t_target.max(1.0);
        if hit_sample {
            h_try = h_to_target;
        }
        let h_min = 1e-13 * t.abs().max(1.0);
        if h_try < h_min {
            return Err(SlError::IntegrationFailure {
                t,
                reason: format!("step size underflow ({h_try:.3e})"),
                partial: Box::new(traj.finish()),
            });
        }
        let (y_new, k_last, err) = stepper.step(t, &y, &k1, h_try);
        if err <= 1.0 {
            t = if hit_sample { t_target } else { t + h_try };
            y = y_new;
            k1 = k_last; // first-same-as-last
            if hit_sample {
                traj.push(t, &y)?;
                next_sample += 1;
            }
        }
        // Standard controller with safety factor and growth clamps. A
        // non-finite error estimate (overflowing state) forces maximal
        // shrinkage so the underflow guard can terminate the run.
        let factor = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        h = (h_try * factor).min(opts.max_step);
        if h <= 0.0 || !h.is_finite() {
            return Err(SlError::IntegrationFailure {
                t,
                reason: "non-finite step size".into(),
                partial: Box::new(traj.finish()),
            });
        }
    }

    let traj = traj.finish();
    traj.validate()?;
    Ok(traj)
}

/// Accumulates samples, unwrapped phases, and the phase-freeze marker.
struct TrajectoryBuilder {
    params: OscillatorParams,
    times: Vec<f64>,
    states: Vec<EnsembleState>,
    observables: Vec<Observables>,
    phases_unwrapped: Vec<Vec<f64>>,
    frozen_from: Option<usize>,
}

impl TrajectoryBuilder {
    fn new(params: OscillatorParams) -> Self {
        Self {
            params,
            times: Vec::new(),
            states: Vec::new(),
            observables: Vec::new(),
            phases_unwrapped: Vec::new(),
            frozen_from: None,
        }
    }

    fn push(&mut self, t: f64, y: &[Complex64]) -> Result<()> {
        let state = EnsembleState::new(y.to_vec())?;
        let idx = self.times.len();
        let valid = state.radii().iter().all(|&r| r >= PHASE_FLOOR);
        if !valid && self.frozen_from.is_none() {
            self.frozen_from = Some(idx);
        }
        let unwrapped = if self.frozen_from.is_some_and(|k| idx >= k) {
            // Phase frozen at last valid value.
            self.phases_unwrapped.last().cloned().unwrap_or_else(|| state.phases())
        } else {
            let phases = state.phases();
            match self.phases_unwrapped.last() {
                None => phases,
                Some(prev) => prev
                    .iter()
                    .zip(&phases)
                    .zip(self.states.last().unwrap().phases().iter())
                    .map(|((&pu, &pn), &po)| pu + wrap_angle(pn - po))
                    .collect(),
            }
        };
        self.observables.push(Observables::compute(&state, &self.params)?);
        self.phases_unwrapped.push(unwrapped);
        self.states.push(state);
        self.times.push(t);
        Ok(())
    }

    fn finish(self) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            observables: self.observables,
            phases_unwrapped: self.phases_unwrapped,
            frozen_from: self.frozen_from,
            params: self.params,
        }
    }
}

/// True iff `max_j r_j(t) < eps` throughout the final `hold` window.
pub fn detect_amplitude_death(traj: &Trajectory, eps: f64, hold: f64) -> bool {
    assert!(
        traj.t_end() >= hold,
        "trajectory must cover at least the hold duration"
    );
    let hi = traj.len() - 1;
    let t_lo = traj.times[hi] - hold;
    let lo = traj.times.partition_point(|&t| t < t_lo);
    (lo..=hi).all(|i| traj.states[i].radii().iter().all(|&r| r < eps))
}

/// If every pairwise unwrapped phase difference stays within `tol` of its
/// tail mean over the final `hold` window, return the tail-averaged (wrapped)
/// difference matrix.
pub fn detect_phase_lock(traj: &Trajectory, tol: f64, hold: f64) -> Option<Vec<f64>> {
    let n = traj.params.n();
    let window = traj.tail_window(hold)?;
    let count = window.clone().count() as f64;
    let mut means = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let mean: f64 = window
                .clone()
                .map(|i| traj.phases_unwrapped[i][j] - traj.phases_unwrapped[i][k])
                .sum::<f64>()
                / count;
            for i in window.clone() {
                let d = traj.phases_unwrapped[i][j] - traj.phases_unwrapped[i][k];
                if (d - mean).abs() >= tol {
                    return None;
                }
            }
            means[j * n + k] = wrap_angle(mean);
        }
    }
    Some(means)
}

/// For `N = 2`, true iff the unwrapped phase difference winds by at least two
/// full turns over the final half of the phase-valid samples. For larger
/// ensembles, incoherence is the negation of locking.
pub fn detect_incoherence(traj: &Trajectory, lock_tol: f64, hold: f64) -> bool {
    let n = traj.params.n();
    if n != 2 {
        return detect_phase_lock(traj, lock_tol, hold).is_none();
    }
    let hi = traj.last_valid();
    let lo = hi / 2;
    if hi == lo {
        return false;
    }
    let d_end = traj.phases_unwrapped[hi][0] - traj.phases_unwrapped[hi][1];
    let d_start = traj.phases_unwrapped[lo][0] - traj.phases_unwrapped[lo][1];
    (d_end - d_start).abs() >= 2.0 * std::f64::consts::TAU
}

/// Least-squares slope of `log(series)` against `t` over the given window.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(SlError::Contract("need at least two (t, value) samples".into()));
    }
    if let Some(&bad) = values.iter().find(|&&v| v <= 0.0) {
        return Err(SlError::Domain(format!("non-positive sample {bad} in fit window")));
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tbar = times.iter().sum::<f64>() / n;
    let lbar = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, l) in times.iter().zip(&logs) {
        num += (t - tbar) * (l - lbar);
        den += (t - tbar) * (t - tbar);
    }
    if den == 0.0 {
        return Err(SlError::Contract("degenerate fit window".into()));
    }
    Ok(num / den)
}

/// Seeded initial-data policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialDataPolicy {
    /// Twin case: equal radii, symmetric phases (ratio exactly 1).
    ManifoldR1,
    /// Random radii, phases uniform in a sector of the given full width (radians).
    RandomSectorial { width: f64 },
    /// Random radii, phases uniform on the full circle.
    RandomAnnulus,
}

impl InitialDataPolicy {
    pub fn sectorial() -> Self {
        // 120 degrees by default.
        Self::RandomSectorial { width: 2.0 * std::f64::consts::FRAC_PI_3 }
    }
}

/// Draw an initial state for the given policy. Radii are uniform in
/// `[0.2, 1.2] * max(sqrt(|alpha_+|), 1)`.
pub fn initial_state(
    policy: InitialDataPolicy,
    params: &OscillatorParams,
    seed: u64,
) -> EnsembleState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = params.alpha_max().abs().sqrt().max(1.0);
    let n = params.n();
    match policy {
        InitialDataPolicy::ManifoldR1 => {
            assert_eq!(n, 2, "manifold policy is for the twin case");
            let r0 = rng.gen_range(0.2..1.2) * scale;
            let phi0 = rng.gen_range(0.1..1.4);
            EnsembleState::from_polar(&[r0, r0], &[phi0 / 2.0, -phi0 / 2.0]).unwrap()
        }
        InitialDataPolicy::RandomSectorial { width } => {
            let center = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let (r, phi): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|_| {
                    let r = rng.gen_range(0.2..1.2) * scale;
                    let p = center + rng.gen_range(-width / 2.0..width / 2.0);
                    (r, p)
                })
                .unzip();
            EnsembleState::from_polar(&r, &phi).unwrap()
        }
        InitialDataPolicy::RandomAnnulus => {
            let (r, phi): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|_| {
                    let r = rng.gen_range(0.2..1.2) * scale;
                    let p = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    (r, p)
                })
                .unzip();
            EnsembleState::from_polar(&r, &phi).unwrap()
        }
    }
}

/// Integrate from a seeded initial state and classify the run with the
/// amplitude-death, phase-lock, and incoherence detectors.
///
/// The sampling interval is shrunk automatically when the phase velocities
/// are large, so that per-sample phase increments stay well below `pi` and
/// unwrapping remains unambiguous.
pub fn classify_by_simulation(
    params: &OscillatorParams,
    policy: InitialDataPolicy,
    opts: &IntegrateOptions,
) -> Result<RegimeLabel> {
    let z0 = initial_state(policy, params, opts.seed);
    let traj = simulate(params, &z0, opts)?;
    Ok(classify_trajectory(&traj))
}

/// [`integrate`] with the automatic sampling-interval guard applied.
pub fn simulate(
    params: &OscillatorParams,
    z0: &EnsembleState,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let omega_max = params.omega().iter().cloned().fold(0.0f64, |m, w| m.max(w.abs()));
    let alpha_max = params.alpha_max().max(1.0);
    let speed = omega_max + 2.0 * params.kappa() + alpha_max;
    let dt_cap = std::f64::consts::FRAC_PI_2 / speed;
    let mut eff = *opts;
    eff.sample_dt = opts.sample_dt.min(dt_cap);
    integrate(params, z0, &eff)
}

/// Label a finished trajectory.
pub fn classify_trajectory(traj: &Trajectory) -> RegimeLabel {
    let amplitude = if detect_amplitude_death(traj, AD_EPS, HOLD) {
        AmplitudeRegime::AmplitudeDeath
    } else {
        let hi = traj.len() - 1;
        let t_lo = traj.times[hi] - HOLD;
        let lo = traj.times.partition_point(|&t| t < t_lo);
        let tail_min = (lo..=hi)
            .map(|i| traj.states[i].radii().into_iter().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min);
        if tail_min > ACTIVE_FLOOR {
            AmplitudeRegime::Active
        } else {
            AmplitudeRegime::Undetermined
        }
    };
    let phase = if detect_phase_lock(traj, LOCK_TOL, HOLD).is_some() {
        PhaseRegime::PhaseLocked
    } else if detect_incoherence(traj, LOCK_TOL, HOLD) {
        PhaseRegime::Incoherent
    } else {
        PhaseRegime::Undetermined
    };
    RegimeLabel::new(amplitude, phase)
}
