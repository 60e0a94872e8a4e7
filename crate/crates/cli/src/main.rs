//! `slosc`: command-line front end for the coupled Stuart-Landau oscillator
//! toolkit. All I/O goes through files and the standard streams; every run
//! drops a `manifest.json` so published numbers can be regenerated from one
//! command.
//!
//! Exit codes: 0 success, 1 configuration error, 2 integration failure.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Deserialize;

use config::{InitialData, RunConfig};
use stuart_landau::analytic2::{
    ad_stability, classify_het, f_curve, gamma_prime, gamma_star, locked_state_het,
    riccati_fixed_points,
};
use stuart_landau::ensemble::{active_fixed_point, ad_conditions};
use stuart_landau::error::SlError;
use stuart_landau::export;
use stuart_landau::integrator::{
    classify_trajectory, detect_phase_lock, initial_state, simulate, AmplitudeRegime, PhaseRegime,
    RegimeLabel, HOLD, LOCK_TOL,
};
use stuart_landau::model::wrap_angle;
use stuart_landau::opinion::{continue_branch, enumerate_fixed_points};
use stuart_landau::sweep::{
    compare, grid_sweep, AxisSpec, PhaseDiagram, Provenance, SweepBase,
};

#[derive(Parser)]
#[command(name = "slosc", version, about = "Coupled Stuart-Landau oscillator toolkit")]
struct Cli {
    /// RNG seed override (takes precedence over the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker-pool size for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Output format for scalar reports.
    #[arg(long, global = true, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one system and write trajectory, observables, and a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify a two-oscillator parameter point analytically (and by
    /// simulation with --check).
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Also classify by simulation and report agreement.
        #[arg(long)]
        check: bool,
    },
    /// Solve for the active phase-locked state of a two-oscillator point.
    LockedState {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate the analytic transition curves for a pair of inherent
    /// amplitudes.
    #[command(allow_negative_numbers = true)]
    Curves {
        #[arg(long)]
        alpha1: f64,
        #[arg(long)]
        alpha2: f64,
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[arg(long, default_value_t = 10.0)]
        gamma_max: f64,
        #[arg(long, default_value_t = 10.0)]
        kappa_max: f64,
    },
    /// Classify a parameter grid and export phase-diagram data.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the general-N death conditions and active fixed point.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
    },
    /// Enumerate opinion fixed points and trace bifurcation branches.
    Opinion {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare two exported phase diagrams.
    Compare {
        /// Sweep CSV of the first diagram.
        #[arg(long)]
        a: PathBuf,
        /// Sweep CSV of the second diagram.
        #[arg(long)]
        b: PathBuf,
        /// Metadata JSON (written next to each sweep CSV).
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        band: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore failure: the pool may already be initialized.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(&cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<SlError>()
                .map_or(1, |e| if matches!(e, SlError::IntegrationFailure { .. }) { 2 } else { 1 });
            std::process::exit(code);
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("cannot create {}", cli.out_dir.display()))?;
    match &cli.command {
        Command::Simulate { config } => cmd_simulate(cli, config),
        Command::Classify { config, check } => cmd_classify(cli, config, *check),
        Command::LockedState { config } => cmd_locked_state(cli, config),
        Command::Curves { alpha1, alpha2, resolution, gamma_max, kappa_max } => {
            cmd_curves(cli, *alpha1, *alpha2, *resolution, *gamma_max, *kappa_max)
        }
        Command::Sweep { config } => cmd_sweep(cli, config),
        Command::Ensemble { config } => cmd_ensemble(cli, config),
        Command::Opinion { config } => cmd_opinion(cli, config),
        Command::Compare { a, b, meta, band } => cmd_compare(cli, a, b, meta, *band),
    }
}

fn effective_seed(cli: &Cli, cfg: &RunConfig) -> u64 {
    cli.seed.or(cfg.seed).unwrap_or(0)
}

fn write_manifest(
    cli: &Cli,
    command: &str,
    config: Option<&RunConfig>,
    seed: u64,
) -> anyhow::Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "seed": seed,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(cli.out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn label_json(l: &RegimeLabel) -> serde_json::Value {
    serde_json::json!({
        "amplitude": match l.amplitude {
            AmplitudeRegime::Active => "Active",
            AmplitudeRegime::AmplitudeDeath => "AmplitudeDeath",
            AmplitudeRegime::Undetermined => "Undetermined",
        },
        "phase": match l.phase {
            PhaseRegime::PhaseLocked => "PhaseLocked",
            PhaseRegime::Incoherent => "Incoherent",
            PhaseRegime::Undetermined => "Undetermined",
        },
        "leader_driven": l.leader_driven,
        "boundary": l.boundary,
    })
}

fn write_report(cli: &Cli, name: &str, value: &serde_json::Value) -> anyhow::Result<PathBuf> {
    let path = cli
        .out_dir
        .join(format!("{name}.{}", if cli.format == "csv" { "csv" } else { "json" }));
    if cli.format == "csv" {
        let mut text = String::from("key,value\n");
        flatten_json("", value, &mut text);
        fs::write(&path, text)?;
    } else {
        fs::write(&path, serde_json::to_string_pretty(value)?)?;
    }
    Ok(path)
}

fn flatten_json(prefix: &str, value: &serde_json::Value, out: &mut String) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_json(&format!("{prefix}[{i}]"), v, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push(',');
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

fn cmd_simulate(cli: &Cli, config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let seed = effective_seed(cli, &cfg);
    let params = cfg.system_params()?;
    let opts = cfg.integrate_options(seed)?;
    let z0 = match cfg.initial_data()? {
        InitialData::Policy(policy) => initial_state(policy, &params, seed),
        InitialData::Explicit(state) => state,
    };
    write_manifest(cli, "simulate", Some(&cfg), seed)?;

    let traj = match simulate(&params, &z0, &opts) {
        Ok(t) => t,
        Err(SlError::IntegrationFailure { t, reason, partial }) => {
            // Keep what was computed, then report the failure exit code.
            let mut f = fs::File::create(cli.out_dir.join("trajectory.csv"))?;
            export::write_trajectory_csv(&mut f, &partial)?;
            return Err(SlError::IntegrationFailure { t, reason, partial }.into());
        }
        Err(e) => return Err(e.into()),
    };

    let mut f = fs::File::create(cli.out_dir.join("trajectory.csv"))?;
    export::write_trajectory_csv(&mut f, &traj)?;
    let mut f = fs::File::create(cli.out_dir.join("observables.csv"))?;
    export::write_observables_csv(&mut f, &traj)?;

    let label = classify_trajectory(&traj);
    let lock = detect_phase_lock(&traj, LOCK_TOL, HOLD);
    let locked_phi = lock.as_ref().and_then(|m| (params.n() == 2).then(|| wrap_angle(m[1])));
    let summary = serde_json::json!({
        "regime": label_json(&label),
        "locked_phase_diffs": lock,
        "locked_phi_pair": locked_phi,
        "amplitude_decay_rate": amplitude_decay_rate(&traj),
        "t_end": traj.t_end(),
        "samples": traj.len(),
        "phase_frozen_from": traj.frozen_from,
    });
    let path = write_report(cli, "summary", &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Fitted exponential rate of `max_j r_j` over the final quarter of the run,
/// when the series is positive there.
fn amplitude_decay_rate(traj: &stuart_landau::model::Trajectory) -> Option<f64> {
    let start = traj.times[traj.len() - 1] * 0.75;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t >= start {
            let r = traj.states[i].radii().into_iter().fold(f64::NEG_INFINITY, f64::max);
            if r <= 0.0 {
                return None;
            }
            ts.push(t);
            vs.push(r);
        }
    }
    stuart_landau::integrator::fit_decay_rate(&ts, &vs).ok()
}

fn cmd_classify(cli: &Cli, config_path: &Path, check: bool) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let seed = effective_seed(cli, &cfg);
    let pair = cfg.pair_params()?;
    write_manifest(cli, "classify", Some(&cfg), seed)?;
    let analytic = classify_het(&pair);
    let mut report = serde_json::json!({
        "params": pair,
        "analytic": label_json(&analytic),
        "f": f_curve(&pair),
        "gamma_star": gamma_star(&pair).ok(),
        "ad_stable": ad_stability(&pair),
    });
    if check {
        let opts = cfg.integrate_options(seed)?;
        let policy = match cfg.initial_data()? {
            InitialData::Policy(p) => p,
            InitialData::Explicit(_) => {
                anyhow::bail!("classify --check needs a randomized initial policy")
            }
        };
        let simulated = stuart_landau::integrator::classify_by_simulation(
            &pair.to_oscillator_params(),
            policy,
            &opts,
        )?;
        report["simulated"] = label_json(&simulated);
        report["agreement"] = serde_json::json!(analytic.same_class(&simulated));
    }
    let path = write_report(cli, "classification", &report)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_locked_state(cli: &Cli, config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let pair = cfg.pair_params()?;
    write_manifest(cli, "locked-state", Some(&cfg), effective_seed(cli, &cfg))?;
    let state = locked_state_het(&pair)?;
    let (plus, minus) = riccati_fixed_points(&pair);
    let report = serde_json::json!({
        "params": pair,
        "locked_state": state,
        "residuals": state.as_ref().map(|s| s.residuals(&pair)),
        "ad_stable": ad_stability(&pair),
        "riccati_plus": { "re": plus.y.re, "im": plus.y.im, "stable": plus.stable },
        "riccati_minus": { "re": minus.y.re, "im": minus.y.im, "stable": minus.stable },
    });
    let path = write_report(cli, "locked_state", &report)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_curves(
    cli: &Cli,
    alpha1: f64,
    alpha2: f64,
    resolution: usize,
    gamma_max: f64,
    kappa_max: f64,
) -> anyhow::Result<()> {
    write_manifest(cli, "curves", None, 0)?;
    let (a1, a2) = if alpha1 >= alpha2 { (alpha1, alpha2) } else { (alpha2, alpha1) };

    if (a1 - a2).abs() < 1e-15 && a1 > 0.0 {
        let mut f = fs::File::create(cli.out_dir.join("kappa_star.csv"))?;
        export::write_kappa_star_csv(&mut f, a1, gamma_max, resolution)?;
    }

    let mut f = fs::File::create(cli.out_dir.join("f_zero.csv"))?;
    export::write_f_zero_csv(&mut f, a1, a2, gamma_max, kappa_max, resolution)?;
    let mut f = fs::File::create(cli.out_dir.join("f_zero_by_kappa.csv"))?;
    write_f_zero_by_kappa(&mut f, a1, a2, gamma_max, kappa_max, resolution)?;

    let mut f = fs::File::create(cli.out_dir.join("gamma_star.csv"))?;
    export::write_gamma_star_csv(&mut f, a1, a2, resolution)?;
    if export_is_empty(cli.out_dir.join("gamma_star.csv").as_path())? {
        eprintln!("note: gamma_star domain is empty for alpha = ({a1}, {a2})");
    }

    if a1 + a2 > 0.0 && a1 > a2 {
        if let Ok((k, g)) = gamma_prime(a1, a2) {
            let marker = serde_json::json!({ "kappa_min": k, "gamma_prime": g });
            fs::write(
                cli.out_dir.join("gamma_prime.json"),
                serde_json::to_string_pretty(&marker)?,
            )?;
        }
    }
    println!("wrote curves to {}", cli.out_dir.display());
    Ok(())
}

/// `f = 0` locus scanned the other way: roots in gamma per kappa.
fn write_f_zero_by_kappa(
    f: &mut fs::File,
    a1: f64,
    a2: f64,
    gamma_max: f64,
    kappa_max: f64,
    resolution: usize,
) -> anyhow::Result<()> {
    use std::io::Write;
    writeln!(f, "kappa,gamma_f_zero")?;
    for i in 1..=resolution {
        let k = kappa_max * i as f64 / resolution as f64;
        for root in stuart_landau::analytic2::f_zero_gamma_roots(a1, a2, k, gamma_max) {
            writeln!(f, "{k:.16e},{root:.16e}")?;
        }
    }
    Ok(())
}

fn export_is_empty(path: &Path) -> anyhow::Result<bool> {
    Ok(fs::read_to_string(path)?.lines().count() <= 1)
}

fn cmd_sweep(cli: &Cli, config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let seed = effective_seed(cli, &cfg);
    let (base, axes, mode, band) = cfg.sweep_spec()?;
    let opts = cfg.integrate_options(seed)?;
    let policy = match cfg.initial_data()? {
        InitialData::Policy(p) => p,
        InitialData::Explicit(_) => anyhow::bail!("sweeps need a randomized initial policy"),
    };
    write_manifest(cli, "sweep", Some(&cfg), seed)?;
    let diagrams = grid_sweep(base, axes, mode, &opts, policy)?;
    for d in &diagrams {
        let stem = match d.provenance {
            Provenance::Analytic => "sweep_analytic",
            Provenance::Simulated => "sweep_simulated",
        };
        let mut f = fs::File::create(cli.out_dir.join(format!("{stem}.csv")))?;
        export::write_sweep_csv(&mut f, d)?;
        fs::write(
            cli.out_dir.join(format!("{stem}.meta.json")),
            export::sweep_metadata_json(d)?,
        )?;
    }
    if diagrams.len() == 2 {
        let stats = compare(&diagrams[0], &diagrams[1], band)?;
        fs::write(cli.out_dir.join("agreement.json"), serde_json::to_string_pretty(&stats)?)?;
        println!(
            "agreement {:.4} over {} cells ({} excluded)",
            stats.agreement, stats.compared_cells, stats.excluded_cells
        );
    }
    println!("wrote sweep data to {}", cli.out_dir.display());
    Ok(())
}

fn cmd_ensemble(cli: &Cli, config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let section = cfg
        .ensemble
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the [ensemble] section"))?;
    write_manifest(cli, "ensemble", Some(&cfg), effective_seed(cli, &cfg))?;
    let verdict = ad_conditions(&section.alpha, section.kappa);
    let fp = active_fixed_point(&section.alpha, section.kappa)?;
    let report =
        export::ensemble_report_json(&section.alpha, section.kappa, &verdict, fp.as_ref())?;
    fs::write(cli.out_dir.join("ensemble_report.json"), report)?;
    println!("wrote {}", cli.out_dir.join("ensemble_report.json").display());
    Ok(())
}

fn cmd_opinion(cli: &Cli, config_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let section = cfg
        .opinion
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the [opinion] section"))?;
    write_manifest(cli, "opinion", Some(&cfg), effective_seed(cli, &cfg))?;
    let radius = section
        .search_radius
        .unwrap_or_else(|| 2.0 * section.alpha.iter().fold(1.0f64, |m, a| m.max(a.abs().sqrt())));
    let grid = section.grid_per_dim.unwrap_or(7);
    let points = enumerate_fixed_points(&section.alpha, section.kappa, radius, grid)?;
    fs::write(cli.out_dir.join("fixed_points.json"), serde_json::to_string_pretty(&points)?)?;
    if let Some(scan) = &section.scan {
        let report = continue_branch(
            &section.alpha,
            &scan.x_start,
            (scan.from, scan.to),
            scan.step.unwrap_or(1e-2),
        )?;
        let mut f = fs::File::create(cli.out_dir.join("bifurcation.csv"))?;
        export::write_bifurcation_csv(&mut f, &report)?;
        fs::write(
            cli.out_dir.join("bifurcations.json"),
            serde_json::to_string_pretty(&serde_json::json!({
                "kappa_values": report.kappa_values,
                "complete": report.complete,
            }))?,
        )?;
    }
    println!("wrote opinion data to {}", cli.out_dir.display());
    Ok(())
}

#[derive(Deserialize)]
struct SweepMeta {
    axes: [AxisSpec; 2],
    params_base: SweepBase,
    seed: u64,
    provenance: Provenance,
    #[allow(dead_code)]
    version: Option<String>,
}

fn load_diagram(csv_path: &Path, meta: &SweepMeta) -> anyhow::Result<PhaseDiagram> {
    let text = fs::read_to_string(csv_path)
        .with_context(|| format!("cannot read {}", csv_path.display()))?;
    let mut cells = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            anyhow::bail!("malformed sweep row {lineno}: {line}");
        }
        let amplitude = match cols[2] {
            "Active" => AmplitudeRegime::Active,
            "AmplitudeDeath" => AmplitudeRegime::AmplitudeDeath,
            "Undetermined" => AmplitudeRegime::Undetermined,
            other => anyhow::bail!("unknown amplitude label {other:?}"),
        };
        let phase = match cols[3] {
            "PhaseLocked" => PhaseRegime::PhaseLocked,
            "Incoherent" => PhaseRegime::Incoherent,
            "Undetermined" => PhaseRegime::Undetermined,
            other => anyhow::bail!("unknown phase label {other:?}"),
        };
        let leader = cols[4] == "true"
            && amplitude == AmplitudeRegime::Active
            && phase == PhaseRegime::PhaseLocked;
        cells.push(
            RegimeLabel::new(amplitude, phase)
                .with_leader(leader)
                .with_boundary(cols[5] == "true"),
        );
    }
    let expected = meta.axes[0].resolution * meta.axes[1].resolution;
    if cells.len() != expected {
        anyhow::bail!("sweep CSV has {} cells, metadata expects {expected}", cells.len());
    }
    Ok(PhaseDiagram {
        axes: meta.axes,
        cells,
        provenance: meta.provenance,
        params_base: meta.params_base,
        seed: meta.seed,
    })
}

fn cmd_compare(cli: &Cli, a: &Path, b: &Path, meta_path: &Path, band: f64) -> anyhow::Result<()> {
    let meta: SweepMeta = serde_json::from_str(
        &fs::read_to_string(meta_path)
            .with_context(|| format!("cannot read {}", meta_path.display()))?,
    )
    .map_err(|e| anyhow::anyhow!("invalid sweep metadata: {e}"))?;
    write_manifest(cli, "compare", None, meta.seed)?;
    let da = load_diagram(a, &meta)?;
    let db = load_diagram(b, &meta)?;
    let stats = compare(&da, &db, band)?;
    fs::write(cli.out_dir.join("agreement.json"), serde_json::to_string_pretty(&stats)?)?;
    println!(
        "agreement {:.4} over {} cells ({} excluded)",
        stats.agreement, stats.compared_cells, stats.excluded_cells
    );
    Ok(())
}
