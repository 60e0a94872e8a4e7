//! TOML run configuration. Every section is schema-validated on load and
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};
use stuart_landau::analytic2::Params2;
use stuart_landau::integrator::{InitialDataPolicy, IntegrateOptions};
use stuart_landau::model::{EnsembleState, OscillatorParams};
use stuart_landau::sweep::{AxisSpec, SweepBase, SweepMode};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// RNG seed for any randomized initial data (overridable with --seed).
    pub seed: Option<u64>,
    pub system: Option<SystemSection>,
    pub initial: Option<InitialSection>,
    pub integrator: Option<IntegratorSection>,
    pub pair: Option<PairSection>,
    pub sweep: Option<SweepSection>,
    pub ensemble: Option<EnsembleSection>,
    pub opinion: Option<OpinionSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub kappa: f64,
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// One of `manifold`, `sectorial`, `annulus`, `explicit`.
    pub policy: String,
    /// Sector width in degrees (sectorial policy only; default 120).
    pub width_deg: Option<f64>,
    /// Explicit initial state as `[[re, im], ...]` (explicit policy only).
    pub z0: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub t_end: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub axis1: AxisSection,
    pub axis2: AxisSection,
    /// `analytic`, `simulate`, or `both`.
    pub mode: String,
    /// Exclusion band for the agreement report (default 0.1).
    pub band: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    /// `kappa`, `gamma`, `alpha`, `alpha1`, or `alpha2`.
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub kappa: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpinionSection {
    pub alpha: Vec<f64>,
    pub kappa: f64,
    pub search_radius: Option<f64>,
    pub grid_per_dim: Option<usize>,
    pub scan: Option<OpinionScanSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpinionScanSection {
    pub from: f64,
    pub to: f64,
    pub step: Option<f64>,
    pub x_start: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        Ok(cfg)
    }

    pub fn system_params(&self) -> anyhow::Result<OscillatorParams> {
        let s = self
            .system
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config is missing the [system] section"))?;
        Ok(OscillatorParams::new(s.kappa, s.alpha.clone(), s.omega.clone())?)
    }

    pub fn pair_params(&self) -> anyhow::Result<Params2> {
        let p = self
            .pair
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config is missing the [pair] section"))?;
        Ok(Params2::new(p.alpha1, p.alpha2, p.kappa, p.gamma)?)
    }

    pub fn integrate_options(&self, seed: u64) -> anyhow::Result<IntegrateOptions> {
        let mut opts = IntegrateOptions::default().with_seed(seed);
        if let Some(sec) = &self.integrator {
            if let Some(v) = sec.t_end {
                opts.t_end = v;
            }
            if let Some(v) = sec.rtol {
                opts.rtol = v;
            }
            if let Some(v) = sec.atol {
                opts.atol = v;
            }
            if let Some(v) = sec.max_step {
                opts.max_step = v;
            }
            if let Some(v) = sec.sample_dt {
                opts.sample_dt = v;
            }
        }
        opts.validate()?;
        Ok(opts)
    }

    /// Initial-data policy, or an explicit state when `policy = "explicit"`.
    pub fn initial_data(&self) -> anyhow::Result<InitialData> {
        let sec = match &self.initial {
            None => return Ok(InitialData::Policy(InitialDataPolicy::RandomAnnulus)),
            Some(sec) => sec,
        };
        match sec.policy.as_str() {
            "manifold" => Ok(InitialData::Policy(InitialDataPolicy::ManifoldR1)),
            "sectorial" => {
                let width = sec.width_deg.unwrap_or(120.0).to_radians();
                Ok(InitialData::Policy(InitialDataPolicy::RandomSectorial { width }))
            }
            "annulus" => Ok(InitialData::Policy(InitialDataPolicy::RandomAnnulus)),
            "explicit" => {
                let z0 = sec
                    .z0
                    .as_ref()
                    .ok_or_else(|| anyhow::anyhow!("explicit policy requires initial.z0"))?;
                let state = EnsembleState::new(
                    z0.iter().map(|&[re, im]| num_complex::Complex64::new(re, im)).collect(),
                )?;
                Ok(InitialData::Explicit(state))
            }
            other => anyhow::bail!("unknown initial policy {other:?}"),
        }
    }

    pub fn sweep_spec(&self) -> anyhow::Result<(SweepBase, [AxisSpec; 2], SweepMode, f64)> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config is missing the [sweep] section"))?;
        let base = SweepBase {
            alpha1: s.alpha1,
            alpha2: s.alpha2,
            kappa: s.kappa.unwrap_or(1.0),
            gamma: s.gamma.unwrap_or(0.0),
        };
        let axes = [axis_from(&s.axis1)?, axis_from(&s.axis2)?];
        let mode = match s.mode.as_str() {
            "analytic" => SweepMode::Analytic,
            "simulate" => SweepMode::Simulate,
            "both" => SweepMode::Both,
            other => anyhow::bail!("unknown sweep mode {other:?}"),
        };
        Ok((base, axes, mode, s.band.unwrap_or(0.1)))
    }
}

pub enum InitialData {
    Policy(InitialDataPolicy),
    Explicit(EnsembleState),
}

fn axis_from(sec: &AxisSection) -> anyhow::Result<AxisSpec> {
    let param = match sec.param.as_str() {
        "kappa" => stuart_landau::sweep::AxisParam::Kappa,
        "gamma" => stuart_landau::sweep::AxisParam::Gamma,
        "alpha" => stuart_landau::sweep::AxisParam::Alpha,
        "alpha1" => stuart_landau::sweep::AxisParam::Alpha1,
        "alpha2" => stuart_landau::sweep::AxisParam::Alpha2,
        other => anyhow::bail!("unknown axis parameter {other:?}"),
    };
    Ok(AxisSpec::new(param, sec.min, sec.max, sec.resolution)?)
}
