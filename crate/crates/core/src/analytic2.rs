//! Closed-form objects for two coupled oscillators: transition curves,
//! Riccati fixed points and explicit solutions, the phase-locked state
//! solver, Jacobians, Routh-Hurwitz stability, and the combined analytical
//! classifier.
//!
//! The central curve is
//!
//! ```text
//! f(a1, a2, kappa, gamma) = a1 + a2 - kappa
//!     + sqrt( (sqrt(4 a^2 g^2 + (a^2 - g^2 + k^2)^2) + a^2 - g^2 + k^2) / 2 )
//! ```
//!
//! with `a = a1 - a2`. The nested radical equals the real part of the
//! principal square root of `(a + i gamma)^2 + kappa^2`, and both diagonal
//! entries of the death-state Jacobian work out to exactly `f / 2`. The
//! death state is therefore linearly stable iff `f < 0` and the system stays
//! active iff `f > 0`; the classifier and the stability predicate use this
//! sign throughout, and the homogeneous limit `f(a, a, k, g) =
//! 2a - k + sqrt(max(k^2 - g^2, 0))` reproduces the twin-case region table.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlError};
use crate::integrator::{AmplitudeRegime, PhaseRegime, RegimeLabel};
use crate::model::OscillatorParams;

/// Relative tolerance for flagging a parameter point as sitting on a
/// transition curve.
pub const BOUNDARY_RTOL: f64 = 1e-9;

/// Parameter point for the two-oscillator analysis, normalized so that
/// `alpha1 >= alpha2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params2 {
    alpha1: f64,
    alpha2: f64,
    kappa: f64,
    gamma: f64,
}

impl Params2 {
    pub fn new(alpha1: f64, alpha2: f64, kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(SlError::Contract(format!("kappa must be positive, got {kappa}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(SlError::Contract(format!("gamma must be >= 0, got {gamma}")));
        }
        if !alpha1.is_finite() || !alpha2.is_finite() {
            return Err(SlError::Contract("alpha values must be finite".into()));
        }
        let (alpha1, alpha2) = if alpha1 >= alpha2 { (alpha1, alpha2) } else { (alpha2, alpha1) };
        Ok(Self { alpha1, alpha2, kappa, gamma })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Amplitude heterogeneity `a = alpha1 - alpha2 >= 0`.
    pub fn a(&self) -> f64 {
        self.alpha1 - self.alpha2
    }

    /// The corresponding full parameter point with `omega = (gamma/2, -gamma/2)`.
    pub fn to_oscillator_params(&self) -> OscillatorParams {
        OscillatorParams::new(
            self.kappa,
            vec![self.alpha1, self.alpha2],
            vec![self.gamma / 2.0, -self.gamma / 2.0],
        )
        .expect("validated fields")
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= BOUNDARY_RTOL * x.abs().max(y.abs()).max(1.0)
}

/// Active/death threshold for twin oscillators: `kappa*(gamma) =
/// (4 alpha^2 + gamma^2) / (4 alpha)`, defined for `gamma > 2 alpha > 0`.
pub fn kappa_star_homog(alpha: f64, gamma: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(SlError::Domain(format!("kappa* needs alpha > 0, got {alpha}")));
    }
    if gamma <= 2.0 * alpha {
        return Err(SlError::Domain(format!(
            "kappa* defined on gamma in (2 alpha, inf); got gamma = {gamma}, alpha = {alpha}"
        )));
    }
    Ok((4.0 * alpha * alpha + gamma * gamma) / (4.0 * alpha))
}

/// Homogeneous limit of the transition curve:
/// `2 alpha - kappa + sqrt(max(kappa^2 - gamma^2, 0))`.
/// Positive on the active side, negative on the death side.
pub fn f_twin(alpha: f64, kappa: f64, gamma: f64) -> f64 {
    2.0 * alpha - kappa + (kappa * kappa - gamma * gamma).max(0.0).sqrt()
}

/// Full case table for twin oscillators (`alpha1 = alpha2 = alpha`,
/// `omega_1 = -omega_2`).
pub fn classify_homog(alpha: f64, kappa: f64, gamma: f64) -> RegimeLabel {
    assert!(kappa > 0.0 && gamma >= 0.0, "need kappa > 0, gamma >= 0");
    let phase = if near(kappa, gamma) || kappa > gamma {
        PhaseRegime::PhaseLocked
    } else {
        PhaseRegime::Incoherent
    };
    let mut boundary = near(kappa, gamma);
    let amplitude = if alpha <= 0.0 {
        AmplitudeRegime::AmplitudeDeath
    } else {
        let f = f_twin(alpha, kappa, gamma);
        let scale = 1.0f64.max(alpha.abs() + kappa + gamma);
        if f.abs() <= BOUNDARY_RTOL * scale {
            boundary = true;
        }
        if f > BOUNDARY_RTOL * scale {
            AmplitudeRegime::Active
        } else {
            AmplitudeRegime::AmplitudeDeath
        }
    };
    RegimeLabel::new(amplitude, phase).with_boundary(boundary)
}

/// Real part of the principal square root of `(a + i gamma)^2 + kappa^2`,
/// the nested radical of the transition curve.
fn radical(a: f64, kappa: f64, gamma: f64) -> f64 {
    let u = a * a - gamma * gamma + kappa * kappa;
    let hyp = f64::hypot(2.0 * a * gamma, u);
    ((hyp + u) / 2.0).max(0.0).sqrt()
}

/// Signed value of the heterogeneous active/death curve. Positive means the
/// death state is linearly unstable (the system stays active); negative
/// means stable amplitude death.
pub fn f_curve(p: &Params2) -> f64 {
    p.alpha1 + p.alpha2 - p.kappa + radical(p.a(), p.kappa, p.gamma)
}

/// Locking/incoherence threshold for two supercritical oscillators:
/// `gamma*(kappa) = kappa (alpha1 + alpha2 - kappa) /
/// sqrt((2 alpha1 - kappa)(2 alpha2 - kappa))` on `kappa in (0, 2 alpha2)`.
pub fn gamma_star(p: &Params2) -> Result<f64> {
    if !(p.alpha1 > p.alpha2 && p.alpha2 > 0.0) {
        return Err(SlError::Domain("gamma* needs alpha1 > alpha2 > 0".into()));
    }
    if !(p.kappa > 0.0 && p.kappa < 2.0 * p.alpha2) {
        return Err(SlError::Domain(format!(
            "gamma* defined on kappa in (0, 2 alpha2) = (0, {}); got {}",
            2.0 * p.alpha2,
            p.kappa
        )));
    }
    let denom = ((2.0 * p.alpha1 - p.kappa) * (2.0 * p.alpha2 - p.kappa)).sqrt();
    Ok(p.kappa * (p.alpha1 + p.alpha2 - p.kappa) / denom)
}

/// The curve `f = 0` solved for `gamma^2` as a function of `kappa` on
/// `kappa > 2 alpha1` (supercritical-on-average regime).
pub fn gamma2_of_kappa(alpha1: f64, alpha2: f64, kappa: f64) -> f64 {
    let s = alpha1 + alpha2;
    let num = -2.0 * (kappa - s).powi(2) * (2.0 * alpha1 * alpha2 - kappa * s);
    let den = kappa * kappa - 2.0 * s * kappa + 4.0 * alpha1 * alpha2;
    num / den
}

/// Location of the minimum of the death region over `kappa > 2 alpha1`:
/// the single real root of the cubic
/// `k^3 - 3 s k^2 + 12 a1 a2 k - 16 a1^2 a2^2 / s` (s = alpha1 + alpha2)
/// via Cardano's formula, shifted by `s`, together with the frequency gap
/// `gamma' = sqrt(gamma^2(kappa))` at that point.
pub fn gamma_prime(alpha1: f64, alpha2: f64) -> Result<(f64, f64)> {
    let s = alpha1 + alpha2;
    if !(s > 0.0) {
        return Err(SlError::Domain(format!(
            "gamma' needs alpha1 + alpha2 > 0, got {s}"
        )));
    }
    if !(alpha1 > alpha2) {
        return Err(SlError::Domain("gamma' needs alpha1 > alpha2".into()));
    }
    let p = 12.0 * alpha1 * alpha2 - 3.0 * s * s;
    let q = -2.0 * s.powi(3) + 12.0 * alpha1 * alpha2 * s - 16.0 * alpha1.powi(2) * alpha2.powi(2) / s;
    let disc = q * q / 4.0 + p.powi(3) / 27.0;
    if disc < 0.0 {
        return Err(SlError::Internal(format!(
            "cubic discriminant expected positive, got {disc}"
        )));
    }
    let root = disc.sqrt();
    let kappa = s + (-q / 2.0 + root).cbrt() + (-q / 2.0 - root).cbrt();
    if kappa <= 2.0 * alpha1 {
        return Err(SlError::Internal(format!(
            "Cardano root {kappa} not above 2 alpha1 = {}",
            2.0 * alpha1
        )));
    }
    let g2 = gamma2_of_kappa(alpha1, alpha2, kappa);
    if g2 < 0.0 {
        return Err(SlError::Internal(format!("gamma^2({kappa}) = {g2} negative")));
    }
    Ok((kappa, g2.sqrt()))
}

/// Equilibrium of the complex ratio `Z = z1 / z2`, with its linear stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiPoint {
    pub y: Complex64,
    pub stable: bool,
}

impl RiccatiPoint {
    /// Residual of the defining quadratic `(a + i gamma) y + (kappa/2)(1 - y^2)`.
    pub fn residual(&self, p: &Params2) -> f64 {
        let ag = Complex64::new(p.a(), p.gamma);
        (ag * self.y + p.kappa / 2.0 * (Complex64::new(1.0, 0.0) - self.y * self.y)).norm()
    }
}

/// Both equilibria `Y+- = (a + i gamma +- sqrt((a + i gamma)^2 + kappa^2)) / kappa`
/// of the ratio dynamics; the plus root attracts whenever the square root has
/// positive real part.
pub fn riccati_fixed_points(p: &Params2) -> (RiccatiPoint, RiccatiPoint) {
    let ag = Complex64::new(p.a(), p.gamma);
    let root = (ag * ag + p.kappa * p.kappa).sqrt();
    let plus = (ag + root) / p.kappa;
    let minus = (ag - root) / p.kappa;
    (
        RiccatiPoint { y: plus, stable: root.re > 0.0 },
        RiccatiPoint { y: minus, stable: false },
    )
}

/// Closed-form solution of the twin-case ratio equation
/// `dY/dt = (kappa/2)(1 + (2 i gamma / kappa) Y - Y^2)` at time `t`.
///
/// For `kappa > gamma` the two equilibria are `Y_inf` and `-conj(Y_inf)` with
/// `Y_inf = sqrt(1 - gamma^2/kappa^2) + i gamma/kappa`, and the flow follows
/// the Moebius form
///
/// ```text
/// Y(t) = (Y_inf + conj(Y_inf) W0 e^{-st}) / (1 - W0 e^{-st}),
/// W0 = (Y0 - Y_inf) / (Y0 + conj(Y_inf)),   s = sqrt(kappa^2 - gamma^2).
/// ```
///
/// At `kappa = gamma` the equilibria merge at `i` and
/// `Y(t) = i + (kappa t / 2 + 1/(Y0 - i))^{-1}`. For `kappa < gamma` the
/// orbit is periodic and is evaluated by adaptive quadrature instead.
pub fn riccati_solution_homog(y0: Complex64, t: f64, kappa: f64, gamma: f64) -> Result<Complex64> {
    if !(kappa > 0.0 && gamma >= 0.0 && t >= 0.0) {
        return Err(SlError::Contract("need kappa > 0, gamma >= 0, t >= 0".into()));
    }
    if kappa > gamma {
        let s = (kappa * kappa - gamma * gamma).sqrt();
        let y_inf = Complex64::new(s / kappa, gamma / kappa);
        let y_minus = -y_inf.conj();
        let denom0 = y0 - y_minus; // = y0 + conj(y_inf)
        if denom0.norm() < 1e-14 {
            // Starting exactly on the repelling equilibrium.
            return Ok(y_minus);
        }
        let w = (y0 - y_inf) / denom0 * (-s * t).exp();
        let den = Complex64::new(1.0, 0.0) - w;
        if den.norm() < 1e-12 * (1.0 + w.norm()) {
            return Err(SlError::Pole(format!("ratio solution pole near t = {t}")));
        }
        Ok((y_inf + y_inf.conj() * w) / den)
    } else if kappa == gamma {
        let i = Complex64::i();
        if (y0 - i).norm() < 1e-300 {
            return Ok(i);
        }
        let den = kappa * t / 2.0 + (y0 - i).inv();
        if den.norm() < 1e-12 {
            return Err(SlError::Pole(format!("ratio solution pole near t = {t}")));
        }
        Ok(i + den.inv())
    } else {
        // Periodic branch: no bounded closed form; integrate the equation.
        integrate_ratio_ode(y0, t, kappa, gamma)
    }
}

/// Small adaptive RK45 on the scalar complex ratio equation; used for the
/// periodic branch of [`riccati_solution_homog`].
fn integrate_ratio_ode(y0: Complex64, t_end: f64, kappa: f64, gamma: f64) -> Result<Complex64> {
    let rhs = |y: Complex64| {
        kappa / 2.0
            * (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 2.0 * gamma / kappa) * y - y * y)
    };
    let mut t = 0.0;
    let mut y = y0;
    let mut h: f64 = 1e-3;
    let (rtol, atol) = (1e-11, 1e-13);
    while t < t_end {
        let h_try = h.min(t_end - t);
        // Cash-Karp style embedded step via two half steps of RK4 vs one full
        // step (step doubling); cheap and adequate for a scalar equation.
        let full = rk4_step(&rhs, y, h_try);
        let half = rk4_step(&rhs, rk4_step(&rhs, y, h_try / 2.0), h_try / 2.0);
        let err = (full - half).norm() / 15.0;
        let scale = atol + rtol * half.norm().max(y.norm());
        if err <= scale {
            t += h_try;
            y = half + (half - full) / 15.0;
            if !y.re.is_finite() || !y.im.is_finite() {
                return Err(SlError::Pole(format!("ratio orbit escaped near t = {t}")));
            }
        }
        let ratio = if err == 0.0 { 4.0 } else { (scale / err).powf(0.2) * 0.9 };
        h = (h_try * ratio.clamp(0.2, 4.0)).min(0.05 / (1.0 + gamma + kappa));
        if h < 1e-14 {
            return Err(SlError::Pole(format!("ratio orbit pole near t = {t}")));
        }
    }
    Ok(y)
}

fn rk4_step(rhs: &impl Fn(Complex64) -> Complex64, y: Complex64, h: f64) -> Complex64 {
    let k1 = rhs(y);
    let k2 = rhs(y + h / 2.0 * k1);
    let k3 = rhs(y + h / 2.0 * k2);
    let k4 = rhs(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// The phase-locked fixed point of the relative dynamics for `a > 0`, with
/// stability verdict and characteristic-polynomial diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockedState2 {
    /// `r1^2 - r2^2` at equilibrium.
    pub l_inf: f64,
    /// Amplitude ratio `r1 / r2 >= 1`.
    pub r_inf: f64,
    /// Phase difference in `(0, pi/2]`.
    pub phi_inf: f64,
    pub r1_inf: f64,
    pub r2_inf: f64,
    /// Coefficients `(a0, a1, a2, a3)` of the characteristic polynomial
    /// `a0 L^3 + a1 L^2 + a2 L + a3` of the relative-dynamics Jacobian.
    pub char_coeffs: [f64; 4],
    pub stable: bool,
}

impl LockedState2 {
    /// Residuals of the three stationarity equations (ratio, phase, gap).
    pub fn residuals(&self, p: &Params2) -> [f64; 3] {
        let (a, k, g) = (p.a(), p.kappa, p.gamma);
        let (l, r, phi) = (self.l_inf, self.r_inf, self.phi_inf);
        let res_r = (a - l) * r + k / 2.0 * phi.cos() * (1.0 - r * r);
        let res_phi = g - k / 2.0 * (r + 1.0 / r) * phi.sin();
        let r1s = self.r1_inf * self.r1_inf;
        let r2s = self.r2_inf * self.r2_inf;
        let res_l = 2.0 * (p.alpha1 * r1s - p.alpha2 * r2s) - l * (k + 2.0 * (r1s + r2s));
        [res_r, res_phi, res_l]
    }
}

/// `g(x) = sqrt(1 - (2 gamma / (kappa (x + 1/x)))^2)`, the cosine of the
/// locked phase difference as a function of the amplitude ratio.
fn g_of(p: &Params2, x: f64) -> f64 {
    let s = 2.0 * p.gamma / (p.kappa * (x + 1.0 / x));
    (1.0 - s * s).max(0.0).sqrt()
}

/// `h(x) = (x^3 (kappa - 2 alpha2) + x (2 alpha1 - kappa)) / (kappa (x^4 - 1))`.
fn h_of(p: &Params2, x: f64) -> f64 {
    (x.powi(3) * (p.kappa - 2.0 * p.alpha2) + x * (2.0 * p.alpha1 - p.kappa))
        / (p.kappa * (x.powi(4) - 1.0))
}

/// Lower end of the admissible ratio interval.
fn x_minus(p: &Params2) -> f64 {
    if p.kappa >= p.gamma {
        1.0
    } else {
        (p.gamma + (p.gamma * p.gamma - p.kappa * p.kappa).sqrt()) / p.kappa
    }
}

/// Upper end of the admissible ratio interval; `None` encodes infinity.
fn x_plus(p: &Params2) -> Option<f64> {
    if p.kappa > 2.0 * p.alpha1 {
        Some(((p.kappa - 2.0 * p.alpha2) / (p.kappa - 2.0 * p.alpha1)).sqrt())
    } else if p.kappa >= 2.0 * p.alpha2 {
        None
    } else {
        Some(((2.0 * p.alpha1 - p.kappa) / (2.0 * p.alpha2 - p.kappa)).sqrt())
    }
}

/// Admissible ratio interval `(x_minus, x_plus)` for the locked state;
/// `None` encodes an unbounded right end.
pub fn ratio_bracket(p: &Params2) -> (f64, Option<f64>) {
    (x_minus(p), x_plus(p))
}

/// Public view of `g` (increasing on the bracket).
pub fn locked_g(p: &Params2, x: f64) -> f64 {
    g_of(p, x)
}

/// Public view of `h` (decreasing on the bracket).
pub fn locked_h(p: &Params2, x: f64) -> f64 {
    h_of(p, x)
}

/// Relative dynamics `F = (F_l, F_R, F_Phi)` of `(l, R, Phi)` with the
/// amplitudes eliminated through `r2^2 = l / (R^2 - 1)`.
fn relative_field(p: &Params2, l: f64, r: f64, phi: f64) -> Vector3<f64> {
    let (a, k, g) = (p.a(), p.kappa, p.gamma);
    let d = r * r - 1.0;
    let f_l = 2.0 * l / d * (p.alpha1 * r * r - p.alpha2 - l * (r * r + 1.0)) - k * l;
    let f_r = (a - l) * r + k / 2.0 * phi.cos() * (1.0 - r * r);
    let f_phi = g - k / 2.0 * (r + 1.0 / r) * phi.sin();
    Vector3::new(f_l, f_r, f_phi)
}

/// Jacobian of [`relative_field`] at a general point (no fixed-point
/// simplifications); used by the Newton polish.
fn relative_jacobian(p: &Params2, l: f64, r: f64, phi: f64) -> Matrix3<f64> {
    let (a, k) = (p.a(), p.kappa);
    let d = r * r - 1.0;
    let inner = p.alpha1 * r * r - p.alpha2 - l * (r * r + 1.0);
    let dl_dl = 2.0 / d * inner - 2.0 * l / d * (r * r + 1.0) - k;
    let dl_dr = 2.0 * l * ((2.0 * p.alpha1 * r - 2.0 * l * r) * d - inner * 2.0 * r) / (d * d);
    let dr_dl = -r;
    let dr_dr = (a - l) - k * r * phi.cos();
    let dr_dphi = -k / 2.0 * phi.sin() * (1.0 - r * r);
    let dphi_dr = -k / 2.0 * (1.0 - 1.0 / (r * r)) * phi.sin();
    let dphi_dphi = -k / 2.0 * (r + 1.0 / r) * phi.cos();
    Matrix3::new(
        dl_dl, dl_dr, 0.0, //
        dr_dl, dr_dr, dr_dphi, //
        0.0, dphi_dr, dphi_dphi,
    )
}

/// Solve for the unique active phase-locked state when it exists.
///
/// Returns `None` when amplitude death is stable (`f <= 0`) or in the
/// incoherent wedge (`alpha2 > 0`, `kappa < 2 alpha2`, `gamma > gamma*`).
/// The ratio root is bracketed per the three-case interval and bisected,
/// then the `(l, R, Phi)` triple is polished with a damped Newton step so
/// that all three stationarity residuals drop below 1e-10.
pub fn locked_state_het(p: &Params2) -> Result<Option<LockedState2>> {
    let a = p.a();
    if !(a > 0.0) {
        return Err(SlError::Domain("locked_state_het needs alpha1 > alpha2".into()));
    }
    let f = f_curve(p);
    if f <= 0.0 {
        return Ok(None);
    }
    let boundary_incoherence = if p.alpha2 > 0.0 && p.kappa < 2.0 * p.alpha2 {
        let gs = gamma_star(p)?;
        if p.gamma > gs * (1.0 + 1e-12) {
            return Ok(None);
        }
        // On the locking/incoherence curve the state is known in closed form:
        // l = a, R = sqrt((2 a1 - k)/(2 a2 - k)), Phi = pi/2.
        (p.gamma - gs).abs() <= 1e-9 * gs.max(1.0)
    } else {
        false
    };

    let (l0, r0, phi0) = if boundary_incoherence {
        let r = ((2.0 * p.alpha1 - p.kappa) / (2.0 * p.alpha2 - p.kappa)).sqrt();
        (a, r, std::f64::consts::FRAC_PI_2)
    } else {
        let r = bracket_and_bisect(p)?;
        let l = ((2.0 * p.alpha1 - p.kappa) * r * r + (p.kappa - 2.0 * p.alpha2))
            / (2.0 * (r * r + 1.0));
        (l, r, g_of(p, r).clamp(-1.0, 1.0).acos())
    };

    let (l, r, phi) = newton_polish(p, l0, r0, phi0)?;
    let r2s = l / (r * r - 1.0);
    if !(r2s > 0.0) {
        return Err(SlError::Internal(format!(
            "locked-state amplitudes invalid: l = {l}, R = {r}"
        )));
    }
    let r2 = r2s.sqrt();
    let r1 = r * r2;
    let (stable, char_coeffs) = stability_from_point(p, l, r, phi);
    let state = LockedState2 { l_inf: l, r_inf: r, phi_inf: phi, r1_inf: r1, r2_inf: r2, char_coeffs, stable };
    let res = state.residuals(p);
    if res.iter().any(|v| v.abs() >= 1e-10) {
        return Err(SlError::Internal(format!(
            "locked-state residuals too large: {res:?} at {p:?}"
        )));
    }
    Ok(Some(state))
}

fn bracket_and_bisect(p: &Params2) -> Result<f64> {
    let xm = x_minus(p);
    let diff = |x: f64| g_of(p, x) - h_of(p, x);
    let mut lo = if xm <= 1.0 { 1.0 + 1e-9 } else { xm * (1.0 + 1e-13) + 1e-13 };
    let mut hi = match x_plus(p) {
        Some(xp) => xp * (1.0 - 1e-13),
        None => {
            let mut hi = (2.0 * lo).max(2.0);
            let mut grow = 0;
            while diff(hi) <= 0.0 {
                hi *= 2.0;
                grow += 1;
                if grow > 300 {
                    return Err(SlError::Internal(
                        "no sign change while expanding the ratio bracket".into(),
                    ));
                }
            }
            hi
        }
    };
    if !(lo < hi) {
        return Err(SlError::Internal(format!("empty ratio bracket [{lo}, {hi}] at {p:?}")));
    }
    let (mut flo, fhi) = (diff(lo), diff(hi));
    if flo >= 0.0 {
        // The left endpoint guard overshot the sign change; tighten it.
        let mut shrink = (lo - xm).max(1e-13);
        let mut tries = 0;
        while flo >= 0.0 && tries < 60 {
            shrink /= 4.0;
            lo = if xm <= 1.0 { 1.0 + shrink } else { xm + shrink };
            flo = diff(lo);
            tries += 1;
        }
    }
    if flo >= 0.0 || fhi <= 0.0 {
        return Err(SlError::Internal(format!(
            "bracket endpoints violate the predicted sign pattern at {p:?}: d(lo) = {flo}, d(hi) = {fhi}"
        )));
    }
    while hi - lo > 1e-12 * lo.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if diff(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Damped Newton on the full `(l, R, Phi)` system; brings the residuals to
/// the floating-point floor even where the ratio equation alone is steep.
fn newton_polish(p: &Params2, mut l: f64, mut r: f64, mut phi: f64) -> Result<(f64, f64, f64)> {
    let mut res = relative_field(p, l, r, phi);
    for _ in 0..60 {
        if res.amax() < 1e-13 {
            break;
        }
        let jac = relative_jacobian(p, l, r, phi);
        let delta = jac
            .lu()
            .solve(&(-res))
            .ok_or_else(|| SlError::Internal("singular Jacobian in locked-state polish".into()))?;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = (l + step * delta[0], r + step * delta[1], phi + step * delta[2]);
            if cand.1 > 1.0 && cand.0 > 0.0 {
                let cres = relative_field(p, cand.0, cand.1, cand.2);
                if cres.amax() < res.amax() {
                    l = cand.0;
                    r = cand.1;
                    phi = cand.2;
                    res = cres;
                    improved = true;
                    break;
                }
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    Ok((l, r, phi))
}

/// Assemble the relative-dynamics Jacobian at a fixed point (in the printed
/// simplified form), return its characteristic coefficients and the
/// Routh-Hurwitz verdict cross-checked against a numerical eigensolve.
pub fn jacobian3_stability(ls: &LockedState2, p: &Params2) -> (bool, [f64; 4]) {
    stability_from_point(p, ls.l_inf, ls.r_inf, ls.phi_inf)
}

/// The Jacobian of the relative dynamics evaluated at a fixed point, using
/// the simplified entries valid there.
pub fn locked_jacobian(p: &Params2, l: f64, r: f64, phi: f64) -> Matrix3<f64> {
    let k = p.kappa;
    let d = r * r - 1.0;
    let d11 = -2.0 * l / d * (r * r + 1.0);
    let d12 = 2.0 * l * r / d * (2.0 * p.alpha1 - 2.0 * l - k);
    let d21 = -r;
    let d22 = -k / 2.0 * (r + 1.0 / r) * phi.cos();
    let d23 = -k / 2.0 * phi.sin() * (1.0 - r * r);
    let d32 = -k / 2.0 * phi.sin() * (1.0 - 1.0 / (r * r));
    let d33 = -k / 2.0 * (r + 1.0 / r) * phi.cos();
    Matrix3::new(d11, d12, 0.0, d21, d22, d23, 0.0, d32, d33)
}

fn stability_from_point(p: &Params2, l: f64, r: f64, phi: f64) -> (bool, [f64; 4]) {
    let j = locked_jacobian(p, l, r, phi);
    let tr = j.trace();
    let m2 = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
        + j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(2, 0)]
        + j[(1, 1)] * j[(2, 2)] - j[(1, 2)] * j[(2, 1)];
    let det = j.determinant();
    let coeffs = [-1.0, tr, -m2, det];
    // Routh-Hurwitz for L^3 + c2 L^2 + c1 L + c0.
    let (c2, c1, c0) = (-tr, m2, -det);
    let rh_stable = c2 > 0.0 && c0 > 0.0 && c2 * c1 > c0;
    // Independent check through the eigensolver.
    let eigs = j.complex_eigenvalues();
    let max_re = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re.abs() > 1e-9 {
        debug_assert_eq!(
            rh_stable,
            max_re < 0.0,
            "Routh-Hurwitz and eigensolve disagree: max Re = {max_re}, coeffs = {coeffs:?}"
        );
    }
    (rh_stable, coeffs)
}

/// Complex eigenvalues of the locked-state Jacobian (for diagnostics).
pub fn locked_jacobian_eigenvalues(ls: &LockedState2, p: &Params2) -> Vec<Complex64> {
    locked_jacobian(p, ls.l_inf, ls.r_inf, ls.phi_inf)
        .complex_eigenvalues()
        .iter()
        .map(|e| Complex64::new(e.re, e.im))
        .collect()
}

/// Linear stability of the death state `r1 = r2 = 0`: true iff `f < 0`.
///
/// Also assembles the block-diagonal 4x4 Jacobian at
/// `(r1, r2, Re Z, Im Z) = (0, 0, Y_inf^+)` and verifies that the sign of
/// its largest eigenvalue real part agrees with the sign of `f` (both
/// amplitude eigenvalues equal `f / 2` identically).
pub fn ad_stability(p: &Params2) -> bool {
    let f = f_curve(p);
    let eigs = ad_jacobian_eigen_real_parts(p);
    let max_re = eigs.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let scale = 1.0f64.max(p.alpha1.abs() + p.alpha2.abs() + p.kappa + p.gamma);
    if f.abs() > 1e-9 * scale {
        debug_assert_eq!(
            max_re < 0.0,
            f < 0.0,
            "4x4 Jacobian disagrees with curve sign: max Re = {max_re}, f = {f}"
        );
    }
    f < 0.0
}

/// Real parts of the four eigenvalues of the death-state Jacobian
/// `(r1, r2, Re Z, Im Z)` at `(0, 0, Y_inf^+)`.
pub fn ad_jacobian_eigen_real_parts(p: &Params2) -> [f64; 4] {
    let (plus, _) = riccati_fixed_points(p);
    let y = plus.y;
    let k = p.kappa;
    let a = p.a();
    // Block-diagonal: two amplitude directions, one 2x2 rotation block.
    let j11 = p.alpha1 + k / 2.0 * ((1.0 / y).re - 1.0);
    let j22 = p.alpha2 + k / 2.0 * (y.re - 1.0);
    let z_re = a - k * y.re; // both eigenvalues of the Z block share this real part
    [j11, j22, z_re, z_re]
}

/// Decision tree combining the death curve, the incoherence curve, and the
/// leader interval into a regime label. Heterogeneity `a = 0` routes to
/// [`classify_homog`]; the transition between the two classifiers is
/// genuinely discontinuous, so no blending is attempted.
pub fn classify_het(p: &Params2) -> RegimeLabel {
    if p.a() == 0.0 {
        return classify_homog(p.alpha1, p.kappa, p.gamma);
    }
    let f = f_curve(p);
    let scale = 1.0f64.max(p.alpha1.abs() + p.alpha2.abs() + p.kappa + p.gamma);
    let mut boundary = f.abs() <= BOUNDARY_RTOL * scale;
    if f <= BOUNDARY_RTOL * scale {
        return RegimeLabel::new(AmplitudeRegime::AmplitudeDeath, PhaseRegime::PhaseLocked)
            .with_boundary(boundary);
    }
    let phase = if p.alpha2 > 0.0 && p.kappa < 2.0 * p.alpha2 {
        let gs = gamma_star(p).expect("domain checked");
        if (p.gamma - gs).abs() <= BOUNDARY_RTOL * gs.max(1.0) {
            boundary = true;
        }
        if p.gamma > gs * (1.0 + BOUNDARY_RTOL) {
            PhaseRegime::Incoherent
        } else {
            PhaseRegime::PhaseLocked
        }
    } else {
        PhaseRegime::PhaseLocked
    };
    let leader = phase == PhaseRegime::PhaseLocked
        && if p.alpha2 > 0.0 {
            p.kappa >= 2.0 * p.alpha2 && p.kappa <= 2.0 * p.alpha1
        } else {
            p.kappa < 2.0 * p.alpha1
        };
    RegimeLabel::new(AmplitudeRegime::Active, phase)
        .with_leader(leader)
        .with_boundary(boundary)
}

/// All roots of `f = 0` in `kappa` over `(0, kappa_max]` at fixed `gamma`.
pub fn f_zero_kappa_roots(alpha1: f64, alpha2: f64, gamma: f64, kappa_max: f64) -> Vec<f64> {
    scan_roots(
        |k| f_curve(&Params2::new(alpha1, alpha2, k, gamma).expect("valid")),
        1e-9 * kappa_max.max(1.0),
        kappa_max,
    )
}

/// All roots of `f = 0` in `gamma` over `[0, gamma_max]` at fixed `kappa`.
pub fn f_zero_gamma_roots(alpha1: f64, alpha2: f64, kappa: f64, gamma_max: f64) -> Vec<f64> {
    scan_roots(
        |g| f_curve(&Params2::new(alpha1, alpha2, kappa, g).expect("valid")),
        0.0,
        gamma_max,
    )
}

fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    const STEPS: usize = 4000;
    let mut roots = Vec::new();
    let step = (hi - lo) / STEPS as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..=STEPS {
        let x = lo + i as f64 * step;
        let fx = f(x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev * fx < 0.0 {
            let (mut a, mut b) = (x_prev, x);
            let mut fa = f_prev;
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(a1: f64, a2: f64, k: f64, g: f64) -> Params2 {
        Params2::new(a1, a2, k, g).unwrap()
    }

    #[test]
    fn params2_normalizes_order() {
        let p = p2(-2.0, 1.0, 1.0, 0.5);
        assert_eq!(p.alpha1(), 1.0);
        assert_eq!(p.alpha2(), -2.0);
        assert_eq!(p.a(), 3.0);
    }

    #[test]
    fn kappa_star_values() {
        // Curve meets kappa = 2 alpha at gamma = 2 alpha.
        assert!((kappa_star_homog(1.0, 2.0 + 1e-12).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(kappa_star_homog(1.0, 4.0).unwrap(), 5.0);
        assert_eq!(kappa_star_homog(0.5, 3.0).unwrap(), 5.0);
        assert!(kappa_star_homog(1.0, 1.0).is_err());
        assert!(kappa_star_homog(-1.0, 4.0).is_err());
    }

    #[test]
    fn classify_homog_case_table() {
        // Subcritical: death everywhere, phase split at kappa = gamma.
        let l = classify_homog(-1.0, 2.0, 1.0);
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
        assert_eq!(l.phase, PhaseRegime::PhaseLocked);
        // Death with winding between the line and the diagonal.
        let l = classify_homog(1.0, 3.0, 4.0);
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
        assert_eq!(l.phase, PhaseRegime::Incoherent);
        // kappa*(4.5) = 6.0625: kappa = 6 still dies, kappa = 6.5 is active.
        let l = classify_homog(1.0, 6.0, 4.5);
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
        let l = classify_homog(1.0, 6.5, 4.5);
        assert_eq!(l.amplitude, AmplitudeRegime::Active);
        assert_eq!(l.phase, PhaseRegime::PhaseLocked);
        // Both small: always active.
        let l = classify_homog(1.0, 0.5, 1.5);
        assert_eq!(l.amplitude, AmplitudeRegime::Active);
        assert_eq!(l.phase, PhaseRegime::Incoherent);
    }

    #[test]
    fn classify_homog_boundary_flags() {
        assert!(classify_homog(1.0, 2.0, 2.0).boundary);
        assert!(classify_homog(1.0, 5.0, 4.0).boundary); // kappa*(4) = 5
        assert!(!classify_homog(1.0, 3.0, 1.0).boundary);
    }

    #[test]
    fn f_curve_root_at_zero_gamma() {
        // kappa*(0) = 2 a1 a2 / (a1 + a2) = 4 for alphas (1, -2).
        let f = f_curve(&p2(1.0, -2.0, 4.0, 0.0));
        assert!(f.abs() < 1e-12, "f = {f}");
        // Sign pattern around the root: active below, death above.
        assert!(f_curve(&p2(1.0, -2.0, 3.9, 0.0)) > 0.0);
        assert!(f_curve(&p2(1.0, -2.0, 4.1, 0.0)) < 0.0);
    }

    #[test]
    fn f_curve_horizontal_asymptote() {
        // As gamma grows the zero crossing approaches kappa = 2 alpha1 = 2.
        for gamma in [1e3, 1e6] {
            let f = f_curve(&p2(1.0, -2.0, 2.0, gamma));
            assert!(f.abs() < 40.0 / gamma, "f = {f} at gamma = {gamma}");
        }
        let roots = f_zero_kappa_roots(1.0, -2.0, 1e4, 10.0);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn f_curve_symmetric_asymptotes() {
        // alpha1 = -alpha2 = 1: asymptotes kappa = 2 and gamma = 2.
        let k_roots = f_zero_kappa_roots(1.0, -1.0, 1e5, 10.0);
        assert_eq!(k_roots.len(), 1);
        assert!((k_roots[0] - 2.0).abs() < 1e-3);
        let g_roots = f_zero_gamma_roots(1.0, -1.0, 1e5, 10.0);
        assert_eq!(g_roots.len(), 1);
        assert!((g_roots[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn f_curve_homogeneous_limit() {
        // f(alpha + eps, alpha, k, g) -> 2 alpha - k + sqrt(k^2 - g^2).
        let eps = 1e-6;
        for (alpha, k, g) in [(1.0, 3.0, 1.0), (0.7, 2.0, 1.9), (1.2, 5.0, 0.0)] {
            let f = f_curve(&p2(alpha + eps, alpha, k, g));
            let expect = f_twin(alpha, k, g);
            assert!((f - expect).abs() < 1e-4, "{f} vs {expect}");
        }
    }

    #[test]
    fn gamma_star_values() {
        let p = p2(1.0, 0.5, 0.5, 0.0);
        let gs = gamma_star(&p).unwrap();
        assert!((gs - 0.5 / 0.75f64.sqrt()).abs() < 1e-12);
        assert!((gs - 0.57735).abs() < 1e-5);
        // Small-kappa limit ~ 0 and divergence at kappa -> 2 alpha2.
        assert!(gamma_star(&p2(1.0, 0.5, 1e-8, 0.0)).unwrap() < 1e-7);
        assert!(gamma_star(&p2(1.0, 0.5, 1.0 - 1e-9, 0.0)).unwrap() > 1e3);
        assert!(gamma_star(&p2(1.0, 0.5, 1.0, 0.0)).is_err());
        assert!(gamma_star(&p2(1.0, -0.5, 0.5, 0.0)).is_err());
    }

    #[test]
    fn gamma_prime_matches_grid_minimum() {
        let (k_min, g_min) = gamma_prime(1.0, 0.5).unwrap();
        assert!((k_min - 2.5678).abs() < 1e-4, "kappa_min = {k_min}");
        // Oracle: grid-minimize gamma^2(kappa) over (2 alpha1, 2 alpha1 + 20].
        let mut best = (0.0, f64::INFINITY);
        let lo = 2.0 + 1e-5;
        let steps = 2_000_000usize;
        for i in 0..=steps {
            let k = lo + i as f64 * 20.0 / steps as f64;
            let g2 = gamma2_of_kappa(1.0, 0.5, k);
            if g2 < best.1 {
                best = (k, g2);
            }
        }
        assert!((best.0 - k_min).abs() < 2e-5, "grid {} vs cardano {k_min}", best.0);
        assert!((best.1.sqrt() - g_min).abs() < 1e-6);
        // Consistency: the minimum lies on the curve and is stationary.
        let f = f_curve(&p2(1.0, 0.5, k_min, g_min));
        assert!(f.abs() < 1e-8, "f at minimum = {f}");
        let h = 1e-4;
        let dg2 = (gamma2_of_kappa(1.0, 0.5, k_min + h) - gamma2_of_kappa(1.0, 0.5, k_min - h))
            / (2.0 * h);
        assert!(dg2.abs() < 1e-6, "dgamma^2/dkappa = {dg2}");
    }

    #[test]
    fn gamma_prime_rejects_subcritical_average() {
        assert!(gamma_prime(1.0, -2.0).is_err());
    }

    #[test]
    fn riccati_points_symmetric_case() {
        let (plus, minus) = riccati_fixed_points(&p2(1.0, 1.0, 1.0, 0.0));
        assert!((plus.y - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((minus.y - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(plus.stable && !minus.stable);
    }

    #[test]
    fn riccati_points_twin_formula() {
        // a = 0, kappa > gamma: Y+ = sqrt(1 - g^2/k^2) + i g/k.
        let p = p2(1.0, 1.0, 2.0, 1.0);
        let (plus, _) = riccati_fixed_points(&p);
        let expect = Complex64::new((1.0 - 0.25f64).sqrt(), 0.5);
        assert!((plus.y - expect).norm() < 1e-14);
    }

    #[test]
    fn riccati_points_satisfy_quadratic() {
        let p = p2(2.0, -1.0, 4.0, 1.0); // a = 3, gamma = 1, kappa = 4
        let (plus, minus) = riccati_fixed_points(&p);
        assert!(plus.residual(&p) < 1e-12);
        assert!(minus.residual(&p) < 1e-12);
    }

    #[test]
    fn riccati_solution_fixed_point_is_constant() {
        let (k, g) = (2.0, 1.0);
        let y_inf = Complex64::new((1.0 - 0.25f64).sqrt(), 0.5);
        for t in [0.0, 1.0, 10.0] {
            let y = riccati_solution_homog(y_inf, t, k, g).unwrap();
            assert!((y - y_inf).norm() < 1e-12);
        }
    }

    #[test]
    fn riccati_solution_equal_parameters_formula() {
        // kappa = gamma = 1, y0 = 1 + i: Y(10) = 1/6 + i.
        let y = riccati_solution_homog(Complex64::new(1.0, 1.0), 10.0, 1.0, 1.0).unwrap();
        assert!((y - Complex64::new(1.0 / 6.0, 1.0)).norm() < 1e-14, "{y}");
    }

    #[test]
    fn riccati_solution_matches_quadrature() {
        // Independent oracle: fixed-step RK4 on the ratio equation.
        let (k, g) = (2.0, 1.0);
        let y0 = Complex64::new(0.3, -0.2);
        let t_end = 5.0;
        let rhs = |y: Complex64| {
            k / 2.0 * (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 2.0 * g / k) * y - y * y)
        };
        let mut y = y0;
        let steps = 500_000;
        let h = t_end / steps as f64;
        for _ in 0..steps {
            y = rk4_step(&rhs, y, h);
        }
        let closed = riccati_solution_homog(y0, t_end, k, g).unwrap();
        assert!((closed - y).norm() < 1e-8, "closed {closed} vs rk4 {y}");
    }

    #[test]
    fn riccati_solution_periodic_branch_runs() {
        // kappa < gamma: quadrature fallback; orbit stays bounded off poles.
        let y = riccati_solution_homog(Complex64::new(0.2, 0.1), 3.0, 1.0, 2.0).unwrap();
        assert!(y.norm() < 50.0);
    }

    #[test]
    fn locked_state_mixed_pair() {
        // Leader zone with a subcritical partner.
        let p = p2(1.0, -2.0, 1.0, 1.0);
        let ls = locked_state_het(&p).unwrap().expect("active state");
        let res = ls.residuals(&p);
        assert!(res.iter().all(|r| r.abs() < 1e-10), "{res:?}");
        assert!(ls.l_inf > 0.0 && ls.l_inf <= p.a());
        assert!(ls.r_inf > 1.0);
        assert!(ls.phi_inf > 0.0 && ls.phi_inf <= std::f64::consts::FRAC_PI_2);
        assert!((ls.r1_inf / ls.r2_inf - ls.r_inf).abs() < 1e-10);
        assert!((ls.r1_inf.powi(2) - ls.r2_inf.powi(2) - ls.l_inf).abs() < 1e-10);
        assert!(ls.stable);
        assert!(ls.char_coeffs.iter().all(|&c| c < 0.0));
    }

    #[test]
    fn locked_state_none_in_death_region() {
        // f(1, -2, 5, 1) < 0: death is stable, no active state.
        let p = p2(1.0, -2.0, 5.0, 1.0);
        assert!(f_curve(&p) < 0.0);
        assert!(locked_state_het(&p).unwrap().is_none());
    }

    #[test]
    fn locked_state_incoherence_boundary_closed_form() {
        // On gamma*: l = a, R = sqrt((2a1 - k)/(2a2 - k)), Phi = pi/2.
        let p0 = p2(1.0, 0.5, 0.5, 0.0);
        let gs = gamma_star(&p0).unwrap();
        let p = p2(1.0, 0.5, 0.5, gs);
        let ls = locked_state_het(&p).unwrap().expect("boundary state");
        assert!((ls.l_inf - 0.5).abs() < 1e-9);
        assert!((ls.r_inf - 3.0f64.sqrt()).abs() < 1e-9);
        assert!((ls.phi_inf - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!(ls.stable, "boundary state keeps linear stability");
    }

    #[test]
    fn locked_state_none_in_incoherent_wedge() {
        let p = p2(1.0, 0.5, 0.3, 3.0);
        assert!(locked_state_het(&p).unwrap().is_none());
    }

    #[test]
    fn leader_quenching_large_gamma() {
        // kappa inside [2 a2, 2 a1], huge gamma: r1^2 near a1 - k/2, r2 small.
        let p = p2(1.0, 0.5, 1.2, 10.0);
        let ls = locked_state_het(&p).unwrap().expect("leader state");
        let res = ls.residuals(&p);
        assert!(res.iter().all(|r| r.abs() < 1e-10), "{res:?}");
        assert!(ls.r2_inf < 0.2);
        assert!((ls.r1_inf.powi(2) - (p.alpha1() - p.kappa() / 2.0)).abs() < 0.05);
    }

    #[test]
    fn ad_stability_matches_curve_sign() {
        assert!(ad_stability(&p2(1.0, -2.0, 5.0, 1.0)));
        assert!(!ad_stability(&p2(1.0, -2.0, 1.0, 1.0)));
        let eig = ad_jacobian_eigen_real_parts(&p2(1.0, -2.0, 5.0, 1.0));
        assert!(eig.iter().all(|&e| e < 0.0));
        // Both amplitude eigenvalues are f/2 identically.
        let p = p2(1.3, -0.4, 2.7, 0.9);
        let eig = ad_jacobian_eigen_real_parts(&p);
        let f = f_curve(&p);
        assert!((eig[0] - f / 2.0).abs() < 1e-12);
        assert!((eig[1] - f / 2.0).abs() < 1e-12);
    }

    #[test]
    fn classify_het_examples() {
        let l = classify_het(&p2(1.0, 0.5, 1.2, 50.0));
        assert_eq!(l.amplitude, AmplitudeRegime::Active);
        assert_eq!(l.phase, PhaseRegime::PhaseLocked);
        assert!(l.leader_driven);

        let l = classify_het(&p2(1.0, 0.5, 0.3, 3.0));
        assert_eq!(l.amplitude, AmplitudeRegime::Active);
        assert_eq!(l.phase, PhaseRegime::Incoherent);

        let l = classify_het(&p2(-0.5, -1.0, 0.7, 2.0));
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
        assert_eq!(l.phase, PhaseRegime::PhaseLocked);
        let l = classify_het(&p2(-0.5, -1.0, 6.0, 0.1));
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
        assert_eq!(l.phase, PhaseRegime::PhaseLocked);
    }

    #[test]
    fn classify_het_boundary_flag() {
        let l = classify_het(&p2(1.0, -2.0, 4.0, 0.0));
        assert!(l.boundary);
        assert_eq!(l.amplitude, AmplitudeRegime::AmplitudeDeath);
    }

    #[test]
    fn gamma_bound_inequality_on_active_side() {
        // Whenever death is unstable and kappa > 2 alpha1, the frequency gap
        // obeys g^2 < (k - s)^2 (k^2 - (k - 2a1)(k - 2a2)) / ((k - 2a1)(k - 2a2)).
        let cases = [(1.0, 0.5, 2.6, 1.0), (1.0, 0.5, 3.0, 2.0), (0.8, 0.1, 2.0, 1.0)];
        for (a1, a2, k, g) in cases {
            let p = p2(a1, a2, k, g);
            if f_curve(&p) > 0.0 && k > 2.0 * a1 {
                let prod = (k - 2.0 * a1) * (k - 2.0 * a2);
                let bound = (k - a1 - a2).powi(2) * (k * k - prod) / prod;
                assert!(g * g < bound, "bound violated at {p:?}");
            }
        }
    }
}
