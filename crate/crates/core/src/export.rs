//! CSV and JSON writers for the documented artifact formats.
//!
//! All floating-point columns are written with 17 significant digits so that
//! values round-trip bit-exactly through the decimal representation.

use std::io::Write;

use crate::analytic2::{f_zero_kappa_roots, gamma_star, kappa_star_homog, Params2};
use crate::ensemble::ActiveFixedPoint;
use crate::error::{Result, SlError};
use crate::integrator::{AmplitudeRegime, PhaseRegime};
use crate::model::Trajectory;
use crate::opinion::{BifurcationReport, StabilityKind};
use crate::sweep::PhaseDiagram;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(e: std::io::Error) -> SlError {
    SlError::Contract(format!("write failed: {e}"))
}

/// Trajectory CSV: header `t, re_1, im_1, ..., re_N, im_N`.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let n = traj.params.n();
    let mut header = String::from("t");
    for j in 1..=n {
        header.push_str(&format!(",re_{j},im_{j}"));
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for (i, &t) in traj.times.iter().enumerate() {
        let mut line = fmt(t);
        for z in traj.states[i].z() {
            line.push_str(&format!(",{},{}", fmt(z.re), fmt(z.im)));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Companion observables CSV: `t`, wrapped `phi_j_k` for all ordered pairs
/// `j < k`, ratios `ratio_j_k` (empty when undefined), `mean_phase`, and
/// `amp_gap` for two oscillators.
pub fn write_observables_csv<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let n = traj.params.n();
    let mut header = String::from("t");
    for j in 0..n {
        for k in (j + 1)..n {
            header.push_str(&format!(",phi_{}_{}", j + 1, k + 1));
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            header.push_str(&format!(",ratio_{}_{}", j + 1, k + 1));
        }
    }
    header.push_str(",mean_phase");
    if n == 2 {
        header.push_str(",amp_gap");
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for (i, &t) in traj.times.iter().enumerate() {
        let obs = &traj.observables[i];
        let mut line = fmt(t);
        for j in 0..n {
            for k in (j + 1)..n {
                line.push_str(&format!(",{}", fmt(obs.phase_diff(j, k))));
            }
        }
        for j in 0..n {
            for k in (j + 1)..n {
                match obs.ratio(j, k) {
                    Some(v) => line.push_str(&format!(",{}", fmt(v))),
                    None => line.push(','),
                }
            }
        }
        line.push_str(&format!(",{}", fmt(obs.mean_phase)));
        if let Some(gap) = obs.amp_gap {
            line.push_str(&format!(",{}", fmt(gap)));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Tabulate the twin-case active/death curve: CSV `gamma, kappa_star`.
pub fn write_kappa_star_csv<W: Write>(
    w: &mut W,
    alpha: f64,
    gamma_max: f64,
    resolution: usize,
) -> Result<()> {
    writeln!(w, "gamma,kappa_star").map_err(io_err)?;
    if alpha <= 0.0 {
        return Ok(());
    }
    let lo = 2.0 * alpha;
    if gamma_max <= lo {
        return Ok(());
    }
    for i in 1..=resolution {
        let g = lo + (gamma_max - lo) * i as f64 / resolution as f64;
        let k = kappa_star_homog(alpha, g)?;
        writeln!(w, "{},{}", fmt(g), fmt(k)).map_err(io_err)?;
    }
    Ok(())
}

/// Tabulate the death-curve locus `f = 0`: CSV `gamma, kappa_f_zero` with
/// one row per root (the locus may be multivalued in kappa).
pub fn write_f_zero_csv<W: Write>(
    w: &mut W,
    alpha1: f64,
    alpha2: f64,
    gamma_max: f64,
    kappa_max: f64,
    resolution: usize,
) -> Result<()> {
    writeln!(w, "gamma,kappa_f_zero").map_err(io_err)?;
    for i in 0..=resolution {
        let g = gamma_max * i as f64 / resolution as f64;
        for root in f_zero_kappa_roots(alpha1, alpha2, g, kappa_max) {
            writeln!(w, "{},{}", fmt(g), fmt(root)).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Tabulate the locking/incoherence curve: CSV `kappa, gamma_star` over its
/// domain `kappa in (0, 2 alpha2)`.
pub fn write_gamma_star_csv<W: Write>(
    w: &mut W,
    alpha1: f64,
    alpha2: f64,
    resolution: usize,
) -> Result<()> {
    writeln!(w, "kappa,gamma_star").map_err(io_err)?;
    if !(alpha1 > alpha2 && alpha2 > 0.0) {
        return Ok(());
    }
    let hi = 2.0 * alpha2;
    for i in 1..resolution {
        let k = hi * i as f64 / resolution as f64;
        let p = Params2::new(alpha1, alpha2, k, 0.0)?;
        writeln!(w, "{},{}", fmt(k), fmt(gamma_star(&p)?)).map_err(io_err)?;
    }
    Ok(())
}

fn amp_name(a: AmplitudeRegime) -> &'static str {
    match a {
        AmplitudeRegime::Active => "Active",
        AmplitudeRegime::AmplitudeDeath => "AmplitudeDeath",
        AmplitudeRegime::Undetermined => "Undetermined",
    }
}

fn phase_name(p: PhaseRegime) -> &'static str {
    match p {
        PhaseRegime::PhaseLocked => "PhaseLocked",
        PhaseRegime::Incoherent => "Incoherent",
        PhaseRegime::Undetermined => "Undetermined",
    }
}

/// Sweep CSV: `axis1, axis2, amplitude_label, phase_label, leader_flag,
/// boundary_flag`.
pub fn write_sweep_csv<W: Write>(w: &mut W, d: &PhaseDiagram) -> Result<()> {
    writeln!(w, "axis1,axis2,amplitude_label,phase_label,leader_flag,boundary_flag")
        .map_err(io_err)?;
    for i in 0..d.axes[0].resolution {
        for j in 0..d.axes[1].resolution {
            let (x, y) = d.point(i, j);
            let c = d.cell(i, j);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt(x),
                fmt(y),
                amp_name(c.amplitude),
                phase_name(c.phase),
                c.leader_driven,
                c.boundary
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Full sweep metadata as JSON (axes, base parameters, seed, provenance,
/// code version).
pub fn sweep_metadata_json(d: &PhaseDiagram) -> Result<String> {
    let meta = serde_json::json!({
        "axes": d.axes,
        "params_base": d.params_base,
        "seed": d.seed,
        "provenance": d.provenance,
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_string_pretty(&meta)
        .map_err(|e| SlError::Contract(format!("metadata serialization failed: {e}")))
}

/// Fixed-point report JSON: `{alphas, kappa, verdict, r_inf, residual, stable}`.
pub fn ensemble_report_json(
    alphas: &[f64],
    kappa: f64,
    verdict: &crate::ensemble::AdVerdict,
    fp: Option<&ActiveFixedPoint>,
) -> Result<String> {
    let report = serde_json::json!({
        "alphas": alphas,
        "kappa": kappa,
        "verdict": verdict,
        "r_inf": fp.map(|f| f.r_inf.clone()),
        "residual": fp.map(|f| f.residual_norm),
        "stable": fp.map(|f| f.stable),
    });
    serde_json::to_string_pretty(&report)
        .map_err(|e| SlError::Contract(format!("report serialization failed: {e}")))
}

fn kind_name(k: StabilityKind) -> &'static str {
    match k {
        StabilityKind::Stable => "stable",
        StabilityKind::Saddle => "saddle",
        StabilityKind::Unstable => "unstable",
        StabilityKind::Marginal => "marginal",
    }
}

/// Bifurcation diagram CSV: `kappa, x_1..x_n, kind` per branch sample.
pub fn write_bifurcation_csv<W: Write>(w: &mut W, report: &BifurcationReport) -> Result<()> {
    let n = report.branch.first().map_or(0, |p| p.x.len());
    let mut header = String::from("kappa");
    for j in 1..=n {
        header.push_str(&format!(",x_{j}"));
    }
    header.push_str(",kind");
    writeln!(w, "{header}").map_err(io_err)?;
    for p in &report.branch {
        let mut line = fmt(p.kappa);
        for &v in &p.x {
            line.push_str(&format!(",{}", fmt(v)));
        }
        line.push_str(&format!(",{}", kind_name(p.kind)));
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}
