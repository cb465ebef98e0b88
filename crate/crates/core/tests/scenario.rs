use std::path::PathBuf;

use proptest::prelude::*;
use qfinsler_core::scenario::{run_scenario, write_trajectory_csv, ScenarioConfig};
use qfinsler_core::validation::validate_scenario;
use qfinsler_core::Error;

fn shipped() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    paths
}

const SMALL: &str = r#"
name = "small"
[metric]
metric = "minkowski"
[particle]
m = 1.0
[[state]]
moments = [1.0, 0.0, 0.25, 1.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0]
p = [0.3, 0.0, 0.0]
[[state]]
chart = { s_x = 0.8, p_sx = 0.2, s_y = 1.3, p_sy = -0.1, alpha = 0.4, p_alpha = 0.02, beta = 1.2, p_beta = 0.3, C1 = 1.0, C2 = 0.5 }
[run]
tau_end = 2.0
samples = 50
sample_every = 5
"#;

#[test]
fn shipped_scenarios_round_trip_through_toml_and_json() {
    let paths = shipped();
    assert_eq!(paths.len(), 6);
    for p in paths {
        let cfg = ScenarioConfig::load(&p).unwrap();
        let toml = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&toml).unwrap(), cfg, "{}", p.display());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&json).unwrap(), cfg, "{}", p.display());
    }
}

#[test]
fn a_single_state_object_is_accepted_in_json() {
    let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
    let mut v = serde_json::to_value(&cfg).unwrap();
    v["state"] = v["state"][1].clone();
    let one = ScenarioConfig::from_json_str(&v.to_string()).unwrap();
    assert_eq!(one.states, vec![cfg.states[1].clone()]);
}

#[test]
fn state_needs_exactly_one_form() {
    let both = SMALL.replace("p = [0.3, 0.0, 0.0]", "p = [0.3, 0.0, 0.0]\nchart = { s_x = 1.0, s_y = 1.0, C1 = 0.8 }");
    let none = SMALL.replace("moments = [1.0, 0.0, 0.25, 1.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0]", "");
    for text in [both, none] {
        assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(Error::Config(_))));
    }
}

#[test]
fn malformed_configs_are_config_errors() {
    let cases = [
        SMALL.replace("tau_end = 2.0", "tau_end = 2.0\nwarp = 9"),
        SMALL.replace("m = 1.0", "m = -1.0"),
        SMALL.replace("sample_every = 5", "sample_every = 5\n[run.tolerances]\nrtol = 0.0"),
        SMALL.replace("metric = \"minkowski\"", "metric = \"kerr\""),
        SMALL.replace("samples = 50", "samples = 0"),
    ];
    for text in cases {
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.is_config(), "{err}");
    }
}

#[test]
fn sweep_output_is_ordered_and_reproducible() {
    let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
    let csv = || {
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.iter().map(|o| o.index).collect::<Vec<_>>(), vec![0, 1]);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &out).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = csv();
    assert_eq!(a, csv());
    // each state alone gives the same rows as inside the sweep
    for k in 0..2 {
        let mut single = cfg.clone();
        single.states = vec![cfg.states[k].clone()];
        let out = run_scenario(&single).unwrap();
        let (full, alone) = (&run_scenario(&cfg).unwrap()[k].record, &out[0].record);
        assert_eq!(full.samples, alone.samples);
    }
    let lines: Vec<&str> = a.lines().collect();
    assert!(lines[0].starts_with("trajectory,tau,t,x,y,z"));
    // 50 intervals, every 5th point plus the last
    assert_eq!(lines.len(), 1 + 2 * 11);
    let tau: Vec<f64> = lines[1..12].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(tau.windows(2).all(|w| w[1] > w[0]));
    assert!(lines[1].split(',').skip(1).all(|f| f.contains('e') && f.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn validation_passes_on_a_small_sweep() {
    let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
    let report = validate_scenario(&cfg).unwrap();
    assert!(report.passed(), "{}", report.table());
}

#[test]
fn an_off_branch_chart_fails_validation() {
    // radicand 16·0.3⁴ − 8·0.3² + 0.5⁴ < 0
    let text = SMALL.replace("p_alpha = 0.02", "p_alpha = 0.3");
    let report = validate_scenario(&ScenarioConfig::from_toml_str(&text).unwrap()).unwrap();
    assert!(!report.passed());
    assert!(report.table().contains("FAIL"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_configs_round_trip(
        m in 0.01f64..100.0, hbar in 0.001f64..10.0, tau in -50.0f64..50.0, rtol in 1e-14f64..1e-3,
        x in proptest::array::uniform4(-1e3f64..1e3), d in proptest::array::uniform10(-10.0f64..10.0),
        samples in 1usize..100_000, every in 1usize..100, label in "[a-z]{1,8}",
    ) {
        prop_assume!(tau != 0.0);
        let mut cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
        cfg.particle.m = m;
        cfg.particle.hbar = hbar;
        cfg.run.tau_end = tau;
        cfg.run.samples = samples;
        cfg.run.sample_every = every;
        cfg.run.tolerances.rtol = rtol;
        cfg.states[0].x = x;
        cfg.states[0].moments = Some(d);
        cfg.states[0].label = Some(label);
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let back = ScenarioConfig::from_json_str(&serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
