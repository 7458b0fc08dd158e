use std::path::Path;
use std::time::Instant;

use helixseek_core::averaging::{
    alignment_angle_series, alignment_trend, ascent_condition, fit_gamma, on_off_response, quasi_steady_report,
    stimulus_trend, transient_cutoff, AlignmentSummary, AscentReport, OnOffReport, QuasiSteadyReport,
};
use helixseek_core::io::fmt_f64;
use helixseek_core::sim::{arrival_metrics, run, ArrivalMetrics, SimAbort};
use helixseek_core::sweep::{par_map_ordered, GridPoint, SweepSpec};
use helixseek_core::{RunConfig, SimConfig, Trajectory};
use serde::Serialize;

use crate::files::{
    config_error, ensure_dir, load_config, load_trajectory, read_text, write_json, write_series, write_text,
    write_trajectory,
};
use crate::manifest::{sha256_hex, RunManifest};
use crate::{svg, AnalysisKind, CliError, FIG2_CONFIG};

#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub rows: usize,
    pub steps: u64,
    pub dt: f64,
    #[serde(flatten)]
    pub arrival: ArrivalMetrics,
    pub condition_value: f64,
    pub is_ascent: bool,
    /// Slope of `c(p̄)` after the transient cutoff.
    pub stimulus_trend: Option<f64>,
}

impl RunMetrics {
    pub fn of(cfg: &RunConfig, sim: &SimConfig, traj: &Trajectory) -> Self {
        let cond = ascent_condition(&cfg.swimmer, &cfg.filter);
        let cutoff = transient_cutoff(&cfg.swimmer, &cfg.filter);
        Self {
            rows: traj.len(),
            steps: sim.n_steps(),
            dt: sim.dt,
            arrival: arrival_metrics(traj, &cfg.field),
            condition_value: cond.condition_value,
            is_ascent: cond.is_ascent,
            stimulus_trend: stimulus_trend(traj, &cfg.field, cutoff),
        }
    }
}

fn sim_config(cfg: &RunConfig) -> Result<SimConfig, CliError> {
    cfg.to_sim_config().map_err(|e| CliError::User(e.to_string()))
}

/// Writes the rows recorded before an abort and builds the diagnostic.
fn aborted(out: &Path, abort: SimAbort) -> CliError {
    let path = out.join("trajectory.partial.csv");
    let saved = write_trajectory(&path, &abort.partial).is_ok();
    let t = abort.partial.rows.get(abort.last_row).map_or(0.0, |r| r.t);
    let mut msg = format!(
        "numerical abort: {}; last good row {} (t = {t})",
        abort.cause, abort.last_row
    );
    if saved {
        msg.push_str(&format!("; rows so far in {}", path.display()));
    }
    CliError::Numeric(msg)
}

pub fn simulate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.noise.seed = seed;
    }
    let sim = sim_config(&cfg)?;
    ensure_dir(out)?;
    let traj = run(&sim).map_err(|a| aborted(out, a))?;
    write_trajectory(&out.join("trajectory.csv"), &traj)?;
    write_json(&out.join("metrics.json"), &RunMetrics::of(&cfg, &sim, &traj))?;
    write_text(&out.join("config.json"), &cfg.to_canonical_json())?;
    let outputs = ["trajectory.csv", "metrics.json", "config.json"].map(String::from).to_vec();
    write_json(
        &out.join("manifest.json"),
        &RunManifest::new(&cfg, outputs, start.elapsed().as_secs_f64()),
    )
}

struct PointOutcome {
    metrics: Option<RunMetrics>,
    abort: Option<String>,
}

fn run_point(point: &GridPoint, out: &Path) -> Result<PointOutcome, CliError> {
    let dir = out.join(format!("point_{:04}", point.index));
    ensure_dir(&dir)?;
    let mut sim = sim_config(&point.config)?;
    sim.noise_stream = point.index as u64;
    write_text(&dir.join("config.json"), &point.config.to_canonical_json())?;
    match run(&sim) {
        Ok(traj) => {
            let metrics = RunMetrics::of(&point.config, &sim, &traj);
            write_trajectory(&dir.join("trajectory.csv"), &traj)?;
            write_json(&dir.join("metrics.json"), &metrics)?;
            Ok(PointOutcome {
                metrics: Some(metrics),
                abort: None,
            })
        }
        Err(abort) => Ok(PointOutcome {
            metrics: None,
            abort: Some(aborted(&dir, abort).to_string()),
        }),
    }
}

fn summary_csv(spec: &SweepSpec, points: &[GridPoint], outcomes: &[PointOutcome]) -> String {
    let mut header = vec!["index".to_string()];
    header.extend(spec.parameters.iter().map(|a| a.path.clone()));
    header.extend(
        [
            "status",
            "hit",
            "t_hit",
            "min_dist",
            "final_c",
            "condition_value",
            "is_ascent",
            "stimulus_trend",
        ]
        .map(String::from),
    );
    let mut text = header.join(",");
    text.push('\n');
    for (point, outcome) in points.iter().zip(outcomes) {
        let mut fields = vec![point.index.to_string()];
        fields.extend(point.values.iter().map(|&v| fmt_f64(v)));
        match &outcome.metrics {
            Some(m) => fields.extend([
                "ok".to_string(),
                m.arrival.hit.to_string(),
                fmt_f64(m.arrival.t_hit),
                fmt_f64(m.arrival.min_dist),
                fmt_f64(m.arrival.final_c),
                fmt_f64(m.condition_value),
                m.is_ascent.to_string(),
                m.stimulus_trend.map(fmt_f64).unwrap_or_default(),
            ]),
            None => {
                let cond = ascent_condition(&point.config.swimmer, &point.config.filter);
                fields.extend(["aborted".to_string(), String::new(), String::new(), String::new(), String::new()]);
                fields.extend([fmt_f64(cond.condition_value), cond.is_ascent.to_string(), String::new()]);
            }
        }
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    text
}

pub fn sweep(
    config_path: &Path,
    sweep_path: &Path,
    out: &Path,
    parallelism: usize,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let start = Instant::now();
    if parallelism == 0 {
        return Err(CliError::User("--parallelism must be at least 1".into()));
    }
    let mut base = load_config(config_path)?;
    if let Some(seed) = seed {
        base.noise.seed = seed;
    }
    let spec: SweepSpec = serde_json::from_str(&read_text(sweep_path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", sweep_path.display())))?;
    if spec.is_empty() {
        return Err(CliError::User(format!("{}: sweep has no grid points", sweep_path.display())));
    }
    let points = spec.expand(&base).map_err(|e| config_error(sweep_path, e))?;
    ensure_dir(out)?;
    let outcomes = par_map_ordered(&points, parallelism, |_, p| run_point(p, out))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    write_text(&out.join("summary.csv"), &summary_csv(&spec, &points, &outcomes))?;
    let mut outputs = vec!["summary.csv".to_string()];
    outputs.extend(points.iter().map(|p| format!("point_{:04}", p.index)));
    write_json(
        &out.join("manifest.json"),
        &RunManifest::new(&base, outputs, start.elapsed().as_secs_f64()),
    )?;
    let failures: Vec<&String> = outcomes.iter().filter_map(|o| o.abort.as_ref()).collect();
    if let Some(first) = failures.first() {
        return Err(CliError::Numeric(format!(
            "{} of {} grid points aborted; first: {first}",
            failures.len(),
            points.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct AscentAnalysis {
    kind: &'static str,
    #[serde(flatten)]
    report: AscentReport,
    stimulus_trend: Option<f64>,
    transient_cutoff: f64,
}

#[derive(Serialize)]
struct AlignmentAnalysis {
    kind: &'static str,
    rows: usize,
    trend: Option<AlignmentSummary>,
}

#[derive(Serialize)]
struct QuasiSteadyAnalysis {
    kind: &'static str,
    #[serde(flatten)]
    report: QuasiSteadyReport,
}

pub fn analyze(config_path: &Path, traj_path: &Path, kind: AnalysisKind, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let traj = load_trajectory(traj_path, &cfg.swimmer)?;
    ensure_dir(out)?;
    let cutoff = transient_cutoff(&cfg.swimmer, &cfg.filter);
    let precondition = |e: &dyn std::fmt::Display| CliError::User(format!("{}: {e}", traj_path.display()));
    match kind {
        AnalysisKind::Ascent => {
            // the fitted law is planar; 3D runs get the sign condition only
            let report = if cfg.swimmer.is_planar() {
                fit_gamma(&traj, &cfg.field, &cfg.swimmer, &cfg.filter).map_err(|e| precondition(&e))?
            } else {
                ascent_condition(&cfg.swimmer, &cfg.filter)
            };
            write_json(
                &out.join("ascent.json"),
                &AscentAnalysis {
                    kind: "ascent",
                    report,
                    stimulus_trend: stimulus_trend(&traj, &cfg.field, cutoff),
                    transient_cutoff: cutoff,
                },
            )
        }
        AnalysisKind::Alignment => {
            let series = alignment_angle_series(&traj, &cfg.field, &cfg.swimmer);
            write_series(
                &out.join("alignment_series.csv"),
                &["t", "angle"],
                series.iter().map(|&(t, a)| vec![t, a]),
            )?;
            write_json(
                &out.join("alignment.json"),
                &AlignmentAnalysis {
                    kind: "alignment",
                    rows: series.len(),
                    trend: alignment_trend(&series, 0.2),
                },
            )
        }
        AnalysisKind::QuasiSteady => {
            let report = quasi_steady_report(&traj, &cfg.swimmer, &cfg.filter).map_err(|e| precondition(&e))?;
            write_json(
                &out.join("quasi_steady.json"),
                &QuasiSteadyAnalysis {
                    kind: "quasi-steady",
                    report,
                },
            )
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Metrics {
    pub variant: String,
    #[serde(flatten)]
    pub run: RunMetrics,
    pub on_off: Option<OnOffReport>,
    pub trajectory_sha256: String,
}

pub fn fig2_config(planar: bool, flip_omega_perp_1: bool) -> RunConfig {
    let mut cfg = RunConfig::from_json_str(FIG2_CONFIG).expect("bundled config is valid");
    if planar {
        cfg = cfg.planar();
    }
    if flip_omega_perp_1 {
        cfg = cfg.flip_omega_perp_1();
    }
    cfg
}

pub fn reproduce_fig2(out: &Path, planar: bool, flip_omega_perp_1: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = fig2_config(planar, flip_omega_perp_1);
    let variant = match (planar, flip_omega_perp_1) {
        (false, false) => "default",
        (true, false) => "planar",
        (false, true) => "flip-omega-perp-1",
        (true, true) => "planar+flip-omega-perp-1",
    };
    let sim = sim_config(&cfg)?;
    ensure_dir(out)?;
    let traj = run(&sim).map_err(|a| aborted(out, a))?;
    let mut csv = Vec::new();
    helixseek_core::io::write_trajectory_csv(&traj, &mut csv).expect("in-memory write");
    write_text(&out.join("trajectory.csv"), std::str::from_utf8(&csv).expect("ascii"))?;
    write_series(
        &out.join("eta_vs_stimulus.csv"),
        &["t", "s", "eta"],
        traj.rows.iter().map(|r| vec![r.t, r.s, r.eta]),
    )?;
    let metrics = Fig2Metrics {
        variant: variant.to_string(),
        run: RunMetrics::of(&cfg, &sim, &traj),
        on_off: on_off_response(&traj, &cfg.field, &cfg.swimmer, 0.0),
        trajectory_sha256: sha256_hex(&csv),
    };
    let arrival = metrics.run.arrival;
    write_text(&out.join("fig2.svg"), &svg::render(&traj, &cfg.field, &arrival, variant))?;
    write_json(&out.join("metrics.json"), &metrics)?;
    write_text(&out.join("config.json"), &cfg.to_canonical_json())?;
    let outputs = [
        "trajectory.csv",
        "eta_vs_stimulus.csv",
        "fig2.svg",
        "metrics.json",
        "config.json",
    ]
    .map(String::from)
    .to_vec();
    write_json(
        &out.join("manifest.json"),
        &RunManifest::new(&cfg, outputs, start.elapsed().as_secs_f64()),
    )?;
    println!("variant={variant}");
    println!("hit={}", arrival.hit);
    println!("t_hit={}", arrival.t_hit);
    println!("min_dist={}", arrival.min_dist);
    println!("final_c={}", arrival.final_c);
    if variant == "default" && !arrival.hit {
        return Err(CliError::Numeric(format!(
            "regression: default fig2 run never came within {} of the source (min distance {})",
            cfg.field.clamp_radius(),
            arrival.min_dist
        )));
    }
    Ok(())
}
