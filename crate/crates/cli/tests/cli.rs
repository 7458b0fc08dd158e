use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use helixseek_cli::{execute, run_with_args, Cli, EXIT_NUMERIC, EXIT_OK, EXIT_USER, FIG2_CONFIG, PLANAR_CONFIG};
use helixseek_core::RunConfig;
use serde_json::Value;
use tempfile::TempDir;

fn cli(args: &[&str]) -> i32 {
    run_with_args(std::iter::once("helixseek").chain(args.iter().copied()))
}

fn error_message(args: &[&str]) -> String {
    let parsed = Cli::try_parse_from(std::iter::once("helixseek").chain(args.iter().copied())).unwrap();
    execute(parsed).unwrap_err().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_canonical_json()).unwrap();
    path
}

fn short_fig2(t_end: f64) -> RunConfig {
    let mut cfg = RunConfig::fig2(200.0);
    cfg.sim.t_end = t_end;
    cfg
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = rows[0].iter().position(|h| h == name).unwrap();
    rows[1..].iter().map(|r| r[k].clone()).collect()
}

#[test]
fn bundled_configs_are_canonical() {
    for text in [FIG2_CONFIG, PLANAR_CONFIG] {
        let cfg = RunConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.to_canonical_json().trim_end(), text.trim_end());
    }
    assert_eq!(RunConfig::from_json_str(FIG2_CONFIG).unwrap(), RunConfig::fig2(200.0));
    assert_eq!(RunConfig::from_json_str(PLANAR_CONFIG).unwrap(), RunConfig::planar_reference(200.0));
}

#[test]
fn simulate_writes_expected_rows() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = short_fig2(3.0);
    cfg.sim.record_stride = 7;
    let config = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("run");
    assert_eq!(cli(&["simulate", "--config", s(&config), "--out", s(&out)]), EXIT_OK);
    let sim = cfg.to_sim_config().unwrap();
    let rows = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(rows.len() - 1, (sim.n_steps() / 7) as usize + 1);
    let metrics = read_json(&out.join("metrics.json"));
    assert_eq!(metrics["rows"].as_u64().unwrap() as usize, rows.len() - 1);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let saved = RunConfig::from_json_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "c.json", &short_fig2(0.5));
    let out = tmp.path().join("run");
    assert_eq!(cli(&["simulate", "--config", s(&config), "--out", s(&out), "--seed", "77"]), EXIT_OK);
    assert_eq!(read_json(&out.join("manifest.json"))["seed"], 77);
}

#[test]
fn zero_step_is_a_user_error_naming_the_key() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = short_fig2(1.0);
    cfg.sim.dt = Some(0.0);
    let path = tmp.path().join("bad.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = tmp.path().join("run");
    let args = ["simulate", "--config", s(&path), "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_USER);
    assert!(error_message(&args).contains("sim.dt"));
}

#[test]
fn unknown_config_key_is_a_user_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, FIG2_CONFIG.replacen("\"swimmer\"", "\"swimmr\"", 1)).unwrap();
    let out = tmp.path().join("run");
    assert_eq!(cli(&["simulate", "--config", s(&path), "--out", s(&out)]), EXIT_USER);
    assert_eq!(cli(&["simulate", "--config", "/nonexistent/c.json", "--out", s(&out)]), EXIT_USER);
    assert_eq!(cli(&["simulate", "--bogus"]), EXIT_USER);
}

#[test]
fn descending_tuning_is_not_an_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = RunConfig::planar_reference(200.0);
    cfg.swimmer.omega_perp_1 = -cfg.swimmer.omega_perp_1;
    cfg.sim.t_end = 5.0;
    let config = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("run");
    assert_eq!(cli(&["simulate", "--config", s(&config), "--out", s(&out)]), EXIT_OK);
    assert_eq!(read_json(&out.join("metrics.json"))["is_ascent"], false);
}

fn sweep(dir: &Path, cfg: &RunConfig, spec: &str, parallelism: &str) -> (i32, PathBuf) {
    let config = write_config(dir, "base.json", cfg);
    let sweep = dir.join("sweep.json");
    fs::write(&sweep, spec).unwrap();
    let out = dir.join(format!("sweep_{parallelism}"));
    let code = cli(&[
        "sweep", "--config", s(&config), "--sweep", s(&sweep), "--out", s(&out), "--parallelism", parallelism,
    ]);
    (code, out)
}

#[test]
fn sweep_rows_follow_grid_order() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"parameters":[{"path":"filter.sigma1","values":[0.3,0.2,0.25]}]}"#;
    let (code, out) = sweep(tmp.path(), &short_fig2(1.0), spec, "1");
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(column(&rows, "index"), ["0", "1", "2"]);
    let sigma: Vec<f64> = column(&rows, "filter.sigma1").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(sigma, [0.3, 0.2, 0.25]);
    for k in 0..3 {
        assert!(out.join(format!("point_{k:04}/trajectory.csv")).is_file());
    }
}

#[test]
fn sweep_summary_does_not_depend_on_parallelism() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = short_fig2(1.0);
    cfg.noise = helixseek_core::NoiseSpec::gaussian(0.02, 5);
    let spec = r#"{"parameters":[{"path":"filter.mu","values":[0.03,0.05]},{"path":"swimmer.omega_perp_1","values":[-1,1,2]}]}"#;
    let (a, out1) = sweep(tmp.path(), &cfg, spec, "1");
    let (b, out8) = sweep(tmp.path(), &cfg, spec, "8");
    assert_eq!((a, b), (EXIT_OK, EXIT_OK));
    assert_eq!(
        fs::read(out1.join("summary.csv")).unwrap(),
        fs::read(out8.join("summary.csv")).unwrap()
    );
    for k in 0..6 {
        let p = format!("point_{k:04}/trajectory.csv");
        assert_eq!(fs::read(out1.join(&p)).unwrap(), fs::read(out8.join(&p)).unwrap());
    }
}

#[test]
fn sweep_over_gain_sign_flips_ascent_flag() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"parameters":[{"path":"swimmer.omega_perp_1","values":[-1,1]}]}"#;
    let (code, out) = sweep(tmp.path(), &short_fig2(0.5), spec, "2");
    assert_eq!(code, EXIT_OK);
    let flags = column(&csv_rows(&out.join("summary.csv")), "is_ascent");
    assert_eq!(flags.len(), 2);
    assert_ne!(flags[0], flags[1]);
}

#[test]
fn sweep_rejects_unknown_path() {
    let tmp = TempDir::new().unwrap();
    let spec = r#"{"parameters":[{"path":"filter.sigma9","values":[1]}]}"#;
    let (code, _) = sweep(tmp.path(), &short_fig2(0.5), spec, "1");
    assert_eq!(code, EXIT_USER);
    let (code, _) = sweep(tmp.path(), &short_fig2(0.5), r#"{"parameters":[]}"#, "1");
    assert_eq!(code, EXIT_USER);
}

fn simulate(dir: &Path, cfg: &RunConfig) -> (PathBuf, PathBuf) {
    let config = write_config(dir, "c.json", cfg);
    let out = dir.join("run");
    assert_eq!(cli(&["simulate", "--config", s(&config), "--out", s(&out)]), EXIT_OK);
    (config, out.join("trajectory.csv"))
}

#[test]
fn alignment_analysis_writes_series() {
    let tmp = TempDir::new().unwrap();
    let (config, traj) = simulate(tmp.path(), &short_fig2(4.0));
    let out = tmp.path().join("an");
    assert_eq!(
        cli(&["analyze", "--config", s(&config), "--trajectory", s(&traj), "--kind", "alignment", "--out", s(&out)]),
        EXIT_OK
    );
    let series = csv_rows(&out.join("alignment_series.csv"));
    assert_eq!(series[0], ["t", "angle"]);
    assert!(series.len() > 100);
    assert_eq!(read_json(&out.join("alignment.json"))["kind"], "alignment");
}

#[test]
fn planar_ascent_analysis_fits_positive_gamma() {
    let tmp = TempDir::new().unwrap();
    let (config, traj) = simulate(tmp.path(), &RunConfig::planar_reference(200.0));
    let out = tmp.path().join("an");
    let args = ["analyze", "--config", s(&config), "--trajectory", s(&traj), "--kind", "ascent", "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_OK);
    let rep = read_json(&out.join("ascent.json"));
    assert_eq!(rep["is_ascent"], true);
    assert!(rep["gamma_fit"].as_f64().unwrap() > 0.0);
    let qs = ["analyze", "--config", s(&config), "--trajectory", s(&traj), "--kind", "quasi-steady", "--out", s(&out)];
    assert_eq!(cli(&qs), EXIT_OK);
    assert!(read_json(&out.join("quasi_steady.json"))["amplitude"].as_f64().unwrap() > 0.0);
}

#[test]
fn short_trajectory_fails_quasi_steady_precondition() {
    let tmp = TempDir::new().unwrap();
    let (config, traj) = simulate(tmp.path(), &short_fig2(1.0));
    let out = tmp.path().join("an");
    let args = ["analyze", "--config", s(&config), "--trajectory", s(&traj), "--kind", "quasi-steady", "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_USER);
}

#[test]
fn malformed_trajectory_reports_line() {
    let tmp = TempDir::new().unwrap();
    let (config, traj) = simulate(tmp.path(), &short_fig2(0.5));
    let text = fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "0.1,not-a-number";
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, lines.join("\n")).unwrap();
    let out = tmp.path().join("an");
    let args = ["analyze", "--config", s(&config), "--trajectory", s(&bad), "--kind", "alignment", "--out", s(&out)];
    assert_eq!(cli(&args), EXIT_USER);
    assert!(error_message(&args).contains("line 4"), "{}", error_message(&args));
}

#[test]
fn reproduce_fig2_default_arrives() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    assert_eq!(cli(&["reproduce-fig2", "--out", s(&out)]), EXIT_OK);
    for f in ["trajectory.csv", "eta_vs_stimulus.csv", "fig2.svg", "metrics.json", "config.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let m = read_json(&out.join("metrics.json"));
    assert_eq!(m["hit"], true);
    assert_eq!(m["variant"], "default");
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn reproduce_fig2_planar_stays_in_plane() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    let code = cli(&["reproduce-fig2", "--out", s(&out), "--planar"]);
    assert!(code == EXIT_OK || code == EXIT_NUMERIC);
    let rows = csv_rows(&out.join("trajectory.csv"));
    let z = column(&rows, "pz");
    assert!(z.iter().all(|v| v == &z[0]));
}

// In 3D the flipped gain still reaches the source, and the run says so.
#[test]
fn reproduce_fig2_flip_reports_outcome() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    assert_eq!(cli(&["reproduce-fig2", "--out", s(&out), "--flip-omega-perp-1"]), EXIT_OK);
    let m = read_json(&out.join("metrics.json"));
    assert_eq!(m["variant"], "flip-omega-perp-1");
    assert_eq!(m["hit"], true);
}
