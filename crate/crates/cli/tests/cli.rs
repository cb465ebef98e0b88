use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qfinsler"));
    c.env_remove("QFINSLER_OUTPUT_DIR");
    c
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

const SMALL: &str = r#"
name = "tiny"
[metric]
metric = "schwarzschild"
params = { gm = 1.0 }
[particle]
m = 1.0
hbar = 0.01
[[state]]
x = [0.0, 18.986832980505138, 0.0, 0.0]
chart = { s_x = 0.1, s_y = 0.1, alpha = 1.5707963267948966, C1 = 0.007071067811865476 }
[run]
tau_end = 5.0
samples = 40
sample_every = 4
"#;

#[test]
fn forward_then_inverse_reports_a_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let moments = dir.path().join("m.json");
    let out = bin().arg("map-forward").arg(scenarios().join("generic-chart.json")).arg("-o").arg(&moments).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().arg("map-inverse").arg(&moments).output().unwrap();
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["roundtrip_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["alpha_defined"], true);
    assert!((v["beta"].as_f64().unwrap() - 1.1).abs() < 1e-9);
}

#[test]
fn validate_passes_on_the_vacuum_scenario() {
    let out = bin().arg("validate").arg(scenarios().join("minkowski-vacuum.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 failed") && !text.contains("FAIL"));
}

#[test]
fn validate_exits_one_on_a_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    // a loose integrator on a long fall breaks the default 1e-9 constraint guard
    let text = SMALL.replace("tau_end = 5.0", "tau_end = 80.0").replace("sample_every = 4", "sample_every = 4\n[run.tolerances]\nrtol = 1e-3\natol = 1e-3");
    std::fs::write(&path, text).unwrap();
    let out = bin().args(["validate", "--json"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "validation");
    let reports = json(&out);
    assert!(reports[0]["checks"].as_array().unwrap().iter().any(|c| c["status"] == "fail"));
}

#[test]
fn simulate_writes_increasing_tau_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("simulate")
        .arg(scenarios().join("schwarzschild-infall-classical.toml"))
        .env("QFINSLER_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("schwarzschild-infall-classical.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("trajectory,tau,"));
    let tau: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(tau.len(), 1001);
    assert!(tau.windows(2).all(|w| w[1] > w[0]));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("schwarzschild-infall-classical.summary.json")).unwrap()).unwrap();
    let t = &summary["trajectories"][0];
    assert!(t["max_constraint"].as_f64().unwrap() < 1e-9);
    assert!((t["tau_q"].as_f64().unwrap() - 90.0).abs() < 1e-7);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let od = dir.path().join(format!("run{k}"));
        let out = bin().arg("simulate").arg(&cfg).arg("--out-dir").arg(&od).output().unwrap();
        assert!(out.status.success());
        outputs.push(std::fs::read(od.join("tiny.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn flag_beats_environment_for_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("env"), dir.path().join("flag"));
    let out = bin().arg("plot-data").arg(&cfg).arg("--out-dir").arg(&b).env("QFINSLER_OUTPUT_DIR", &a).output().unwrap();
    assert!(out.status.success());
    assert!(b.join("tiny.plot.csv").exists() && !a.exists());
    let out = bin().arg("plot-data").arg(&cfg).env("QFINSLER_OUTPUT_DIR", &a).output().unwrap();
    assert!(out.status.success());
    let plot = std::fs::read_to_string(a.join("tiny.plot.csv")).unwrap();
    assert!(plot.starts_with("trajectory,tau,t,constraint,"));
    assert_eq!(plot.lines().count(), 1 + 11);
}

#[test]
fn config_errors_exit_two_with_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("hbar = 0.01", "hbar = 0.01\nspin = 1")).unwrap();
    for args in [vec!["simulate"], vec!["validate"], vec!["tensors"]] {
        let out = bin().args(&args).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&out)["error"], "config");
    }
    let out = bin().args(["map-inverse", "/definitely/not/here.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["dispersion", "--mass", "1", "--units", "natural"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unphysical_moments_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    // Δ(x²)Δ(p²) = 0.01 < ħ²/4
    let state = serde_json::json!({
        "mean_x": [0.0, 0.0, 0.0, 0.0], "mean_p": [0.0, 0.0, 0.0, 0.0],
        "delta": [0.1, 0.0, 0.1, 1.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0], "hbar": 1.0
    });
    std::fs::write(&path, state.to_string()).unwrap();
    for cmd in ["map-inverse", "info"] {
        let out = bin().arg(cmd).arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(3), "{cmd}");
        let e = error_json(&out);
        assert_eq!(e["exit_code"], 3);
        assert_eq!(e["error"], "non_physical");
    }
}

#[test]
fn cesium_dispersion_report() {
    let out = bin().args(["dispersion", "--species", "cesium", "--temperature", "300"]).output().unwrap();
    assert!(out.status.success());
    let v = json(&out);
    let bound = v["fluctuation_bound"].as_f64().unwrap();
    assert!(bound > 250.0 && bound < 360.0, "{bound}");
    assert!(v["thermal_spread"].as_f64().unwrap() > 0.0);
}

#[test]
fn tensors_reports_the_euler_identity() {
    let out = bin().arg("tensors").arg(scenarios().join("minkowski-squeezed.toml")).args(["--state", "1"]).output().unwrap();
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["euler_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["g_q"].as_array().unwrap().len(), 10);
    let out = bin().arg("tensors").arg(scenarios().join("minkowski-squeezed.toml")).args(["--state", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_every_subcommand() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["map-forward", "map-inverse", "info", "tensors", "simulate", "dispersion", "validate", "plot-data"] {
        assert!(text.contains(sub), "{sub}");
    }
    let out = bin().args(["simulate", "--help"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("QFINSLER_OUTPUT_DIR"));
}
