use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mislearn_cli::RunManifest;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mislearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mislearn"))
        .args(args)
        .env_remove("MISLEARN_OUT_DIR")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = mislearn(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn learn_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        run_ok(&["learn", &cfg("three_equilibria.toml"), "--runs", "1", "--horizon", "1000", "--seed", "42", "--out-dir", d.to_str().unwrap()]);
    }
    for f in ["trajectory_run0.csv", "convergence.json", "convergence_counts.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = std::fs::read_to_string(a.join("trajectory_run0.csv")).unwrap();
    assert!(header.starts_with("n,m,xi,h,X\n"));
}

#[test]
fn manifest_round_trips_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_ok(&["learn", &cfg("unique.toml"), "--runs", "4", "--horizon", "2000", "--out-dir", first.to_str().unwrap()]);
    let manifest = RunManifest::read(&first.join("manifest.json")).unwrap();
    let text = serde_json::to_string(&manifest).unwrap();
    assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), manifest);
    assert_eq!(manifest.seeds, vec![1]);

    let second = dir.path().join("second");
    let stdout = run_ok(&["replay", first.join("manifest.json").to_str().unwrap(), "--out-dir", second.to_str().unwrap()]);
    assert!(stdout.contains("all identical"), "{stdout}");
    assert_eq!(std::fs::read(first.join("manifest.json")).unwrap(), std::fs::read(second.join("manifest.json")).unwrap());

    // a tampered hash is caught
    let mut bad = manifest.clone();
    bad.outputs[0].sha256 = "0".repeat(64);
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, bad.to_bytes().unwrap()).unwrap();
    let out = mislearn(&["replay", bad_path.to_str().unwrap(), "--out-dir", dir.path().join("third").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unique_equilibrium_learns_the_sink() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["learn", &cfg("unique.toml"), "--runs", "20", "--horizon", "20000", "--format", "json", "--out-dir", dir.path().to_str().unwrap()]);
    let r = json(&dir.path().join("convergence.json"));
    assert_eq!(r["schema_version"], 1);
    let last = r["data"]["checkpoints"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["frequencies"], serde_json::json!([1.0]));
    let t = json(&dir.path().join("trajectory_run0.json"));
    assert_eq!(t["columns"], serde_json::json!(["n", "m", "xi", "h", "X"]));
}

#[test]
fn solve_reports_three_alternating_equilibria() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["solve", &cfg("three_equilibria.toml"), "--grid", "11", "--out-dir", dir.path().to_str().unwrap()]);
    let r = json(&dir.path().join("equilibria.json"));
    let pts = r["data"]["equilibria"]["points"].as_array().unwrap();
    let stab: Vec<&str> = pts.iter().map(|p| p["stability"].as_str().unwrap()).collect();
    assert_eq!(stab, ["stable", "unstable", "stable"]);
    assert!((pts[0]["beta_hat"].as_f64().unwrap() - 1.83051388).abs() < 1e-8);
    let curve = std::fs::read_to_string(dir.path().join("psi_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 12);
}

#[test]
fn zero_delta_has_one_sce_at_the_truth() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("three_equilibria.toml"))
        .unwrap()
        .replace("delta_mu = 0.5", "delta_mu = 0.0");
    let path = dir.path().join("zero.toml");
    std::fs::write(&path, src).unwrap();
    run_ok(&["solve", path.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    let pts = json(&dir.path().join("o/equilibria.json"))["data"]["equilibria"]["points"].clone();
    assert_eq!(pts.as_array().unwrap().len(), 1);
    assert_eq!(pts[0]["beta_hat"], 2.0);
    assert_eq!(pts[0]["is_sce"], true);
}

#[test]
fn phase_nullcline_has_zero_f2() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["phase", &cfg("three_equilibria.toml"), "--grid", "15", "--out-dir", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("nullcline.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,xi,F1,F2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{text}");
    let field = std::fs::read_to_string(dir.path().join("phase_field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 15 * 15);
}

#[test]
fn compare_kappa_step_respects_weak_set_order() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("three_equilibria.toml")).unwrap().replace(
        "first_order = \"truth_effort\"",
        "first_order = \"truth_effort\"\nperturbations = [{ kind = \"zeta\", lever = \"neg_kappa\", step = 0.01 }]",
    );
    let path = dir.path().join("k.toml");
    std::fs::write(&path, src).unwrap();
    run_ok(&["compare", path.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    let table = std::fs::read_to_string(dir.path().join("o/comparative_statics.csv")).unwrap();
    let row = table.lines().nth(1).unwrap();
    assert!(row.starts_with("neg_kappa,0.01,false,true,"), "{row}");
}

#[test]
fn disparity_without_passthrough_favours_m() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["disparity", &cfg("two_groups.toml"), "--out-dir", dir.path().to_str().unwrap()]);
    let r = json(&dir.path().join("disparity.json"));
    assert_eq!(r["data"]["report"]["m_out_earns_w"], true);
    assert_eq!(r["data"]["orderings_hold"], true);
}

#[test]
fn multigroup_writes_equilibrium_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["multigroup", &cfg("two_groups.toml"), "--runs", "4", "--horizon", "2000", "--out-dir", dir.path().to_str().unwrap()]);
    let r = json(&dir.path().join("multigroup.json"));
    let b = r["data"]["color_sighted"]["beta_hat"].as_array().unwrap();
    assert!(b[0].as_f64().unwrap() < 2.0 && b[1].as_f64().unwrap() > 2.0);
    let t = std::fs::read_to_string(dir.path().join("multigroup_trajectory.csv")).unwrap();
    assert!(t.starts_with("n,group,m,xi,h,X\n"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mislearn"))
        .args(["check", &cfg("unique.toml"), "--grid", "8"])
        .env("MISLEARN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("assumptions.json").exists());
}

#[test]
fn invalid_support_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(configs().join("unique.toml")).unwrap().replace("lower = 0.3", "lower = 0.0");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, src).unwrap();
    let out = mislearn(&["solve", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.toml:16") && err.contains("lower bound must be > 0"), "{err}");
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    let src = std::fs::read_to_string(configs().join("unique.toml")).unwrap().replace("seed = 1", "sed = 1");
    std::fs::write(&path, src).unwrap();
    let out = mislearn(&["learn", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("typo.toml:22") && err.contains("sed"), "{err}");
}

#[test]
fn zero_horizon_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = mislearn(&["learn", &cfg("unique.toml"), "--horizon", "0", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("horizon must be ≥ 1"));
}
