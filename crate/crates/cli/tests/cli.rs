use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cgl_steer::dynamics::ControlSegment;
use cgl_steer::spectral::io as field_io;
use cgl_steer_cli::config::{Experiment, FieldSpec};
use cgl_steer_cli::manifest::RunManifest;
use cgl_steer_cli::presets::preset;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgl-steer"))
        .args(args)
        .output()
        .expect("spawn")
}

fn bin_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgl-steer"))
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn malformed_config_exits_2_without_run_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\"kind\": \"simulate\", \"horizon_s\": ").unwrap();
    let out_dir = tmp.path().join("run");
    let out = bin(&["run", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    assert_eq!(bin(&["validate-config", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn missing_referenced_file_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = preset("constant-decay").unwrap();
    cfg.initial = FieldSpec::File("absent.cglf".into());
    let path = tmp.path().join("c.json");
    fs::write(&path, cfg.to_json()).unwrap();
    let out_dir = tmp.path().join("run");
    assert_eq!(
        bin(&["run", "--config", s(&path), "--out", s(&out_dir)]).status.code(),
        Some(2)
    );
    assert!(!out_dir.exists());
}

#[test]
fn constant_decay_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("decay");
    let out = bin(&["run", "--preset", "constant-decay", "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("simulate:"));

    let text = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t_s,hs_norm,l2_norm,max_modulus");
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let rho = (1.0 + 2.0 * v[0]).powf(-0.5);
        assert!((v[3] - rho).abs() < 1e-6, "t = {}", v[0]);
        n += 1;
    }
    assert!(n > 1000);
    assert!(dir.join("snapshot_000.cglf").exists() && dir.join("snapshot_001.cglf").exists());

    assert_eq!(
        bin(&["emit-plotdata", "--out", s(&dir), "--quiet"]).status.code(),
        Some(0)
    );
    let rows = data_rows(&dir.join("norms.dat"));
    assert_eq!(rows.len(), n);
    assert_eq!(rows[0].len(), 4);
}

#[test]
fn saturation_report_states_saturating() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("sat");
    assert_eq!(
        bin(&["run", "--preset", "saturation-plane", "--out", s(&dir), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    let report = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(report.contains("saturating = true"));
    assert!(report.contains("generator of Z^2: true"));
    let levels = fs::read_to_string(dir.join("levels.csv")).unwrap();
    assert!(levels.starts_with("level,dimension,max_degree,frequencies\n0,5,1,"));
}

#[test]
fn emit_plotdata_on_missing_run_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = bin(&["emit-plotdata", "--out", s(&tmp.path().join("nothing"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn limit_plotdata_has_decreasing_deltas() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("lim");
    assert_eq!(
        bin(&["run", "--preset", "limit-nu0-constant", "--out", s(&dir), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin(&["emit-plotdata", "--out", s(&dir), "--quiet"]).status.code(),
        Some(0)
    );
    let rows = data_rows(&dir.join("limit.dat"));
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1][0] < w[0][0]));
    assert!(rows.iter().all(|r| r[1] > 0.0));
}

#[test]
fn phase_control_plotdata_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("phase");
    let out = bin_env(
        &["run", "--preset", "phase-level0-nu0", "--out", s(&dir), "--seed", "11"],
        "CGL_STEER_THREADS",
        "2",
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("error =") && summary.contains("T =") && summary.contains("δ ="));

    let m = RunManifest::load(&dir).unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(m.config.synthesis.seed, 11);
    assert_eq!(m.kind, "phase-control");
    assert!(m.wall_times.contains_key("refinement_0"));
    let refinements = m.output("refinements.csv").unwrap();
    assert_eq!(refinements.schema.as_ref().unwrap().version, 1);
    assert_eq!(refinements.sha256.len(), 64);

    assert_eq!(
        bin(&["emit-plotdata", "--out", s(&dir), "--quiet"]).status.code(),
        Some(0)
    );
    let rows = data_rows(&dir.join("refinements.dat"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == 2));
}

#[test]
fn rerun_from_copied_config_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(
        bin(&["run", "--preset", "null-r2-neg1", "--out", s(&first), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    let second = tmp.path().join("second");
    let copied = first.join("config.json");
    assert_eq!(
        bin(&["validate-config", "--config", s(&copied), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin(&["run", "--config", s(&copied), "--out", s(&second), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    let (a, b) = (RunManifest::load(&first).unwrap(), RunManifest::load(&second).unwrap());
    assert!(!a.outputs.is_empty());
    for o in &a.outputs {
        assert_eq!(b.output(&o.file).unwrap().sha256, o.sha256, "{}", o.file);
    }
}

#[test]
fn blow_up_is_reported_with_exit_3() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = preset("constant-decay").unwrap();
    cfg.params.v = 3.0;
    cfg.params.mu = 0.0;
    cfg.solver.blowup_threshold = Some(1.2);
    let path = tmp.path().join("c.json");
    fs::write(&path, cfg.to_json()).unwrap();
    let dir = tmp.path().join("run");
    let out = bin(&["run", "--config", s(&path), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(3));
    let m = RunManifest::load(&dir).unwrap();
    assert!(m.message.unwrap().contains("threshold"));
}

#[test]
fn field_file_initial_condition_and_zero_horizon() {
    let tmp = TempDir::new().unwrap();
    let base = preset("constant-decay").unwrap();
    let field = base.initial.build(&base.solver.grid).unwrap();
    field_io::write_field(fs::File::create(tmp.path().join("psi0.cglf")).unwrap(), &field).unwrap();
    let mut cfg = base.clone();
    cfg.initial = FieldSpec::File("psi0.cglf".into());
    cfg.experiment = Experiment::Simulate {
        horizon: 0.0,
        segments: vec![ControlSegment::new(0.1, vec![1.0, 0.0, 0.0]).unwrap()],
        snapshot_times: Vec::new(),
    };
    let path = tmp.path().join("c.json");
    fs::write(&path, cfg.to_json()).unwrap();
    let dir = tmp.path().join("run");
    assert_eq!(
        bin(&["run", "--config", s(&path), "--out", s(&dir), "--quiet"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bin(&["emit-plotdata", "--out", s(&dir), "--quiet"]).status.code(),
        Some(0)
    );
    assert_eq!(data_rows(&dir.join("norms.dat")), vec![vec![0.0, 1.0, 1.0, 1.0]]);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = bin_env(&["presets"], "CGL_STEER_THREADS", "many");
    assert_eq!(out.status.code(), Some(2));
}
