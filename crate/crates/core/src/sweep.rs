//! Parameter-grid engine: classify a plane of two-oscillator parameter
//! points with the analytic classifier, by direct simulation, or both, and
//! compute agreement statistics away from the transition curves.
//!
//! Cells are evaluated by a worker pool over independent pure tasks and
//! written back by index, so concurrency cannot reorder the output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::analytic2::{classify_het, Params2};
use crate::error::{Result, SlError};
use crate::integrator::{
    classify_by_simulation, AmplitudeRegime, InitialDataPolicy, IntegrateOptions, PhaseRegime,
    RegimeLabel,
};

/// Which two-oscillator parameter an axis binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParam {
    Kappa,
    Gamma,
    /// Homogeneous inherent amplitude (sets both oscillators).
    Alpha,
    Alpha1,
    Alpha2,
}

/// One grid axis: the half-open range `(min, max]` divided into
/// `resolution` cells, sampled at the right edge of each cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub param: AxisParam,
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
}

impl AxisSpec {
    pub fn new(param: AxisParam, min: f64, max: f64, resolution: usize) -> Result<Self> {
        if !(max > min) || resolution == 0 {
            return Err(SlError::Contract("axis needs max > min and resolution > 0".into()));
        }
        Ok(Self { param, min, max, resolution })
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (i + 1) as f64 * (self.max - self.min) / self.resolution as f64
    }
}

/// Fixed parameters of a sweep; axis-bound entries are overridden per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub alpha1: f64,
    pub alpha2: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl SweepBase {
    pub fn homogeneous(alpha: f64) -> Self {
        Self { alpha1: alpha, alpha2: alpha, kappa: 1.0, gamma: 0.0 }
    }

    fn at(&self, axes: &[AxisSpec; 2], v1: f64, v2: f64) -> Result<Params2> {
        let mut b = *self;
        for (axis, v) in axes.iter().zip([v1, v2]) {
            match axis.param {
                AxisParam::Kappa => b.kappa = v,
                AxisParam::Gamma => b.gamma = v,
                AxisParam::Alpha => {
                    b.alpha1 = v;
                    b.alpha2 = v;
                }
                AxisParam::Alpha1 => b.alpha1 = v,
                AxisParam::Alpha2 => b.alpha2 = v,
            }
        }
        Params2::new(b.alpha1, b.alpha2, b.kappa, b.gamma)
    }
}

/// How cells of a diagram were classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Simulated,
}

/// Classification mode of a sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Analytic,
    Simulate,
    Both,
}

/// Rendering-ready phase-diagram data: a label per grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub axes: [AxisSpec; 2],
    /// Row-major over (axis1 index, axis2 index).
    pub cells: Vec<RegimeLabel>,
    pub provenance: Provenance,
    pub params_base: SweepBase,
    pub seed: u64,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &RegimeLabel {
        &self.cells[i * self.axes[1].resolution + j]
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.axes[0].value(i), self.axes[1].value(j))
    }

    pub fn n_cells(&self) -> usize {
        self.axes[0].resolution * self.axes[1].resolution
    }
}

/// Evaluate every cell of the grid. `Both` returns the analytic diagram
/// followed by the simulated one. Per-cell integration failures become
/// `Undetermined` labels; they never abort the sweep.
pub fn grid_sweep(
    base: SweepBase,
    axes: [AxisSpec; 2],
    mode: SweepMode,
    opts: &IntegrateOptions,
    policy: InitialDataPolicy,
) -> Result<Vec<PhaseDiagram>> {
    let mut out = Vec::new();
    if matches!(mode, SweepMode::Analytic | SweepMode::Both) {
        out.push(sweep_analytic(base, axes, opts.seed)?);
    }
    if matches!(mode, SweepMode::Simulate | SweepMode::Both) {
        out.push(sweep_simulated(base, axes, opts, policy)?);
    }
    Ok(out)
}

fn cell_indices(axes: &[AxisSpec; 2]) -> Vec<(usize, usize)> {
    let (r1, r2) = (axes[0].resolution, axes[1].resolution);
    (0..r1).flat_map(|i| (0..r2).map(move |j| (i, j))).collect()
}

fn sweep_analytic(base: SweepBase, axes: [AxisSpec; 2], seed: u64) -> Result<PhaseDiagram> {
    let idx = cell_indices(&axes);
    let cells: Vec<RegimeLabel> = idx
        .par_iter()
        .map(|&(i, j)| {
            match base.at(&axes, axes[0].value(i), axes[1].value(j)) {
                Ok(p) => classify_het(&p),
                Err(_) => RegimeLabel::new(AmplitudeRegime::Undetermined, PhaseRegime::Undetermined),
            }
        })
        .collect();
    Ok(PhaseDiagram { axes, cells, provenance: Provenance::Analytic, params_base: base, seed })
}

fn sweep_simulated(
    base: SweepBase,
    axes: [AxisSpec; 2],
    opts: &IntegrateOptions,
    policy: InitialDataPolicy,
) -> Result<PhaseDiagram> {
    let idx = cell_indices(&axes);
    let r2 = axes[1].resolution as u64;
    let cells: Vec<RegimeLabel> = idx
        .par_iter()
        .map(|&(i, j)| {
            let cell_seed = opts
                .seed
                .wrapping_add((i as u64 * r2 + j as u64).wrapping_mul(0x9E3779B97F4A7C15));
            let cell_opts = opts.with_seed(cell_seed);
            match base.at(&axes, axes[0].value(i), axes[1].value(j)) {
                Ok(p) => classify_by_simulation(&p.to_oscillator_params(), policy, &cell_opts)
                    .unwrap_or_else(|_| {
                        RegimeLabel::new(AmplitudeRegime::Undetermined, PhaseRegime::Undetermined)
                    }),
                Err(_) => RegimeLabel::new(AmplitudeRegime::Undetermined, PhaseRegime::Undetermined),
            }
        })
        .collect();
    Ok(PhaseDiagram { axes, cells, provenance: Provenance::Simulated, params_base: base, seed: opts.seed })
}

/// Points on the analytic transition curves of the plane spanned by `axes`,
/// recovered by scanning the analytic classifier on a refined grid and
/// collecting midpoints of label changes. Resolution-independent of the
/// sweep grid; accurate to about half a fine-grid cell.
pub fn transition_curve_points(base: SweepBase, axes: &[AxisSpec; 2]) -> Vec<(f64, f64)> {
    const FINE: usize = 400;
    let fine = [
        AxisSpec { resolution: FINE, ..axes[0] },
        AxisSpec { resolution: FINE, ..axes[1] },
    ];
    let label = |i: usize, j: usize| -> Option<(AmplitudeRegime, PhaseRegime)> {
        base.at(&fine, fine[0].value(i), fine[1].value(j))
            .ok()
            .map(|p| {
                let l = classify_het(&p);
                (l.amplitude, l.phase)
            })
    };
    let mut pts = Vec::new();
    let grid: Vec<Vec<Option<(AmplitudeRegime, PhaseRegime)>>> =
        (0..FINE).map(|i| (0..FINE).map(|j| label(i, j)).collect()).collect();
    for i in 0..FINE {
        for j in 0..FINE {
            let here = match grid[i][j] {
                Some(l) => l,
                None => continue,
            };
            if i + 1 < FINE {
                if let Some(right) = grid[i + 1][j] {
                    if right != here {
                        let (x0, y0) = (fine[0].value(i), fine[1].value(j));
                        let (x1, _) = (fine[0].value(i + 1), y0);
                        pts.push(((x0 + x1) / 2.0, y0));
                    }
                }
            }
            if j + 1 < FINE {
                if let Some(up) = grid[i][j + 1] {
                    if up != here {
                        let (x0, y0) = (fine[0].value(i), fine[1].value(j));
                        let y1 = fine[1].value(j + 1);
                        pts.push((x0, (y0 + y1) / 2.0));
                    }
                }
            }
        }
    }
    pts
}

/// Agreement statistics between two diagrams over the same axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementStats {
    pub total_cells: usize,
    /// Cells skipped because they sit within the exclusion band of an
    /// analytic transition curve.
    pub excluded_cells: usize,
    pub compared_cells: usize,
    pub matching_cells: usize,
    pub agreement: f64,
    /// Confusion counts keyed by "analytic-label -> simulated-label".
    pub confusion: BTreeMap<String, usize>,
}

fn label_name(l: &RegimeLabel) -> String {
    let amp = match l.amplitude {
        AmplitudeRegime::Active => "Active",
        AmplitudeRegime::AmplitudeDeath => "AmplitudeDeath",
        AmplitudeRegime::Undetermined => "Undetermined",
    };
    let ph = match l.phase {
        PhaseRegime::PhaseLocked => "PhaseLocked",
        PhaseRegime::Incoherent => "Incoherent",
        PhaseRegime::Undetermined => "Undetermined",
    };
    format!("{amp}+{ph}")
}

/// Fraction of matching labels over cells farther than `exclusion_band`
/// (Euclidean in the plane) from every analytic transition curve.
pub fn compare(a: &PhaseDiagram, b: &PhaseDiagram, exclusion_band: f64) -> Result<AgreementStats> {
    if a.axes != b.axes {
        return Err(SlError::Contract("diagram axes differ".into()));
    }
    let curves = transition_curve_points(a.params_base, &a.axes);
    let mut stats = AgreementStats {
        total_cells: a.n_cells(),
        excluded_cells: 0,
        compared_cells: 0,
        matching_cells: 0,
        agreement: 0.0,
        confusion: BTreeMap::new(),
    };
    for i in 0..a.axes[0].resolution {
        for j in 0..a.axes[1].resolution {
            let (x, y) = a.point(i, j);
            let dist2 = curves
                .iter()
                .map(|&(cx, cy)| (cx - x).powi(2) + (cy - y).powi(2))
                .fold(f64::INFINITY, f64::min);
            if dist2 <= exclusion_band * exclusion_band {
                stats.excluded_cells += 1;
                continue;
            }
            let (la, lb) = (a.cell(i, j), b.cell(i, j));
            stats.compared_cells += 1;
            if la.same_class(lb) {
                stats.matching_cells += 1;
            } else {
                *stats
                    .confusion
                    .entry(format!("{} -> {}", label_name(la), label_name(lb)))
                    .or_insert(0) += 1;
            }
        }
    }
    stats.agreement = if stats.compared_cells > 0 {
        stats.matching_cells as f64 / stats.compared_cells as f64
    } else {
        1.0
    };
    Ok(stats)
}

/// Connected components (8-adjacency) per distinct (amplitude, phase) label.
pub fn label_components(d: &PhaseDiagram) -> BTreeMap<String, Vec<usize>> {
    let (r1, r2) = (d.axes[0].resolution, d.axes[1].resolution);
    let mut seen = vec![false; r1 * r2];
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for start in 0..r1 * r2 {
        if seen[start] {
            continue;
        }
        let label = label_name(&d.cells[start]);
        let mut size = 0usize;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            size += 1;
            let (i, j) = (idx / r2, idx % r2);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= r1 as i64 || nj >= r2 as i64 {
                        continue;
                    }
                    let nidx = ni as usize * r2 + nj as usize;
                    if !seen[nidx] && label_name(&d.cells[nidx]) == label {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
        out.entry(label).or_default().push(size);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homog_axes(res: usize) -> [AxisSpec; 2] {
        [
            AxisSpec::new(AxisParam::Gamma, 0.05, 4.0, res).unwrap(),
            AxisSpec::new(AxisParam::Kappa, 0.05, 4.0, res).unwrap(),
        ]
    }

    #[test]
    fn axis_values_half_open() {
        let ax = AxisSpec::new(AxisParam::Kappa, 0.0, 4.0, 40).unwrap();
        assert!((ax.value(0) - 0.1).abs() < 1e-12);
        assert!((ax.value(39) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_sweep_pure_and_deterministic() {
        let base = SweepBase::homogeneous(1.0);
        let axes = homog_axes(16);
        let a = grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap();
        let b = grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap();
        assert_eq!(a[0].cells, b[0].cells);
        assert_eq!(a[0].n_cells(), 256);
    }

    #[test]
    fn simulated_sweep_reproducible_under_seed() {
        let base = SweepBase::homogeneous(1.0);
        let axes = [
            AxisSpec::new(AxisParam::Gamma, 0.5, 3.5, 6).unwrap(),
            AxisSpec::new(AxisParam::Kappa, 0.5, 3.5, 6).unwrap(),
        ];
        let opts = IntegrateOptions::default().with_t_end(120.0).with_seed(4);
        let a = grid_sweep(base, axes, SweepMode::Simulate, &opts, InitialDataPolicy::ManifoldR1)
            .unwrap();
        let b = grid_sweep(base, axes, SweepMode::Simulate, &opts, InitialDataPolicy::ManifoldR1)
            .unwrap();
        assert_eq!(a[0].cells, b[0].cells);
    }

    #[test]
    fn analytic_regions_match_region_table() {
        let base = SweepBase::homogeneous(1.0);
        let axes = homog_axes(40);
        let d = &grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        // Spot-check the four regions (axis1 = gamma, axis2 = kappa).
        let find = |g: f64, k: f64| -> RegimeLabel {
            let i = (0..40).min_by_key(|&i| ((d.axes[0].value(i) - g).abs() * 1e9) as u64).unwrap();
            let j = (0..40).min_by_key(|&j| ((d.axes[1].value(j) - k).abs() * 1e9) as u64).unwrap();
            *d.cell(i, j)
        };
        let l = find(1.0, 3.0);
        assert_eq!((l.amplitude, l.phase), (AmplitudeRegime::Active, PhaseRegime::PhaseLocked));
        let l = find(1.5, 0.5);
        assert_eq!((l.amplitude, l.phase), (AmplitudeRegime::Active, PhaseRegime::Incoherent));
        let l = find(4.0, 3.0);
        assert_eq!((l.amplitude, l.phase), (AmplitudeRegime::AmplitudeDeath, PhaseRegime::Incoherent));
        let l = find(3.0, 3.2);
        assert_eq!((l.amplitude, l.phase), (AmplitudeRegime::AmplitudeDeath, PhaseRegime::PhaseLocked));
    }

    #[test]
    fn curve_points_cover_known_curves() {
        let base = SweepBase::homogeneous(1.0);
        let axes = homog_axes(40);
        let pts = transition_curve_points(base, &axes);
        assert!(!pts.is_empty());
        // Every reported point lies near the diagonal, the kappa = 2 line, or
        // kappa*(gamma).
        for &(g, k) in &pts {
            let d_diag = (k - g).abs() / 2.0f64.sqrt();
            let d_line = (k - 2.0).abs();
            let d_star = if g > 2.0 {
                (k - (4.0 + g * g) / 4.0).abs()
            } else {
                f64::INFINITY
            };
            let d = d_diag.min(d_line).min(d_star);
            assert!(d < 0.05, "stray curve point at ({g}, {k})");
        }
    }

    #[test]
    fn compare_identical_diagrams() {
        let base = SweepBase::homogeneous(1.0);
        let axes = homog_axes(20);
        let d = &grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        let stats = compare(d, d, 0.0).unwrap();
        assert_eq!(stats.agreement, 1.0);
        assert_eq!(stats.compared_cells, 400);
        let stats = compare(d, d, 0.1).unwrap();
        assert_eq!(stats.agreement, 1.0);
        assert!(stats.compared_cells < 400);
        assert!(stats.excluded_cells > 0);
    }

    #[test]
    fn compare_rejects_axis_mismatch() {
        let base = SweepBase::homogeneous(1.0);
        let d1 = &grid_sweep(base, homog_axes(10), SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        let d2 = &grid_sweep(base, homog_axes(12), SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        assert!(compare(d1, d2, 0.1).is_err());
    }

    #[test]
    fn heterogeneous_death_region_bounded_by_asymptotes() {
        // alphas (1, -1): the death region sits above kappa = 2 and right of
        // gamma = 2.
        let base = SweepBase { alpha1: 1.0, alpha2: -1.0, kappa: 1.0, gamma: 0.0 };
        let axes = [
            AxisSpec::new(AxisParam::Gamma, 0.05, 6.0, 30).unwrap(),
            AxisSpec::new(AxisParam::Kappa, 0.05, 6.0, 30).unwrap(),
        ];
        let d = &grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        for i in 0..30 {
            for j in 0..30 {
                let (g, k) = d.point(i, j);
                if d.cell(i, j).amplitude == AmplitudeRegime::AmplitudeDeath {
                    assert!(g > 2.0 && k > 2.0, "death cell below an asymptote at ({g}, {k})");
                }
            }
        }
    }

    #[test]
    fn components_form_expected_regions() {
        let base = SweepBase::homogeneous(1.0);
        let axes = homog_axes(40);
        let d = &grid_sweep(base, axes, SweepMode::Analytic, &IntegrateOptions::default(), InitialDataPolicy::ManifoldR1).unwrap()[0];
        let comps = label_components(d);
        for label in ["Active+PhaseLocked", "Active+Incoherent", "AmplitudeDeath+Incoherent"] {
            let sizes = comps.get(label).unwrap_or_else(|| panic!("missing region {label}"));
            assert_eq!(sizes.len(), 1, "{label} split into {sizes:?}");
        }
        // The locked death crescent pinches to zero width; require the bulk
        // of it to be one component.
        if let Some(sizes) = comps.get("AmplitudeDeath+PhaseLocked") {
            let total: usize = sizes.iter().sum();
            let largest = sizes.iter().max().unwrap();
            assert!(*largest as f64 >= 0.95 * total as f64, "{sizes:?}");
        }
    }
}
