mod common;

use std::fs;
use std::path::Path;

use hamsplit::experiments::{
    build_initial, exit_code, run_normalform, run_scan, run_simulate, ExperimentConfig, InitialData, ModelSource,
};
use hamsplit::io::{state_from_bytes, state_from_csv};
use hamsplit::{Error, EvolutionConfig, MultiIndex, SparsePolynomial};
use serde_json::Value;
use tempfile::tempdir;

const NLS: &str = r#"{"type": "nls", "K": 8, "nonlinearity": {"kind": "nls_gauge", "coefficients": [0.0, 1.0]}}"#;

fn config(extra: &str) -> ExperimentConfig {
    let text = format!(r#"{{"model": {NLS}, {extra}}}"#);
    ExperimentConfig::from_json(&text, Path::new(".")).unwrap()
}

fn simulate_config(seed: u64) -> ExperimentConfig {
    let mut cfg = config(
        r#""scheme": {"composition": "strang", "rounding": {"enabled": true, "s": 2.0}},
           "evolution": {"h": 0.01, "n_steps": 200, "cadence": 20, "s": 2.0,
                         "tracked": [[1], [-2]], "long_time": {"epsilon": 0.1, "r": 4}},
           "initial": {"kind": "long_time", "max_mode": 6, "decay": 2.0},
           "plots": true"#,
    );
    cfg.seed = seed;
    cfg
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn model_path_is_resolved_against_the_config() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("model.json"), NLS).unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(&cfg_path, r#"{"model": "model.json", "seed": 3}"#).unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    assert!(matches!(cfg.model, ModelSource::Inline(_)));
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.build_model().unwrap().lattice().len(), 17);

    let missing = dir.path().join("bad.json");
    fs::write(&missing, r#"{"model": "nowhere.json"}"#).unwrap();
    assert!(ExperimentConfig::load(&missing).is_err());
    let unknown = r#"{"model": {"type": "nls", "K": 2, "nonlinearity": {"kind": "nls_gauge", "coefficients": [0.0, 1.0]}}, "bogus": 1}"#;
    assert!(ExperimentConfig::from_json(unknown, dir.path()).is_err());
}

#[test]
fn simulate_writes_artifacts_and_a_reloadable_manifest() {
    let dir = tempdir().unwrap();
    let cfg = simulate_config(11);
    let written = run_simulate(&cfg, dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in [
        "trajectory.csv",
        "final_state.csv",
        "final_state.bin",
        "norm.svg",
        "actions.svg",
        "manifest.json",
    ] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,norm_s,h0_energy,head,tail,zeroed,I_1,I_-2"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[0].starts_with("0,"));
    assert!(rows[10].starts_with("200,"));

    let from_csv = state_from_csv(&fs::read_to_string(dir.path().join("final_state.csv")).unwrap()).unwrap();
    let from_bin = state_from_bytes(&fs::read(dir.path().join("final_state.bin")).unwrap()).unwrap();
    assert_eq!(from_csv, from_bin);

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["derived"]["eta"].as_f64().unwrap(), 0.1f64.powf(4.25));
    let initial = &manifest["derived"]["initial"];
    assert!((initial["norm_s"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(
        initial["norm_2s_at_most_one"].as_bool().unwrap(),
        initial["norm_2s"].as_f64().unwrap() <= 1.0
    );
    let again = ExperimentConfig::from_json(&manifest.to_string(), dir.path()).unwrap();
    assert_eq!(again, cfg);

    // rerunning from the manifest reproduces the run bit for bit
    let dir2 = tempdir().unwrap();
    run_simulate(&again, dir2.path()).unwrap();
    assert_eq!(
        fs::read(dir.path().join("final_state.bin")).unwrap(),
        fs::read(dir2.path().join("final_state.bin")).unwrap()
    );
}

#[test]
fn seed_controls_the_initial_data() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    run_simulate(&simulate_config(1), a.path()).unwrap();
    run_simulate(&simulate_config(2), b.path()).unwrap();
    assert_ne!(
        fs::read(a.path().join("final_state.bin")).unwrap(),
        fs::read(b.path().join("final_state.bin")).unwrap()
    );
}

#[test]
fn initial_recipes() {
    let cfg = config(r#""seed": 5"#);
    let model = cfg.build_model().unwrap();
    let evo = EvolutionConfig::new(0.1, 1, 1.0);
    let modes: InitialData = serde_json::from_str(
        r#"{"kind": "modes", "modes": [{"mode": [2], "re": 0.5}, {"mode": [-1], "re": 0.0, "im": 1.0}]}"#,
    )
    .unwrap();
    let (z, report) = build_initial(&model, &modes, &evo, 0).unwrap();
    assert_eq!(z.get(&hamsplit::Mode::d1(2)).unwrap(), common::c(0.5, 0.0));
    assert_eq!(z.get(&hamsplit::Mode::d1(-1)).unwrap(), common::c(0.0, 1.0));
    assert!((report.norm_s - z.sobolev_norm(1.0)).abs() < 1e-15);
    let far: InitialData = serde_json::from_str(r#"{"kind": "modes", "modes": [{"mode": [9], "re": 1.0}]}"#).unwrap();
    assert!(build_initial(&model, &far, &evo, 0).is_err());

    let smooth: InitialData =
        serde_json::from_str(r#"{"kind": "smooth", "max_mode": 4, "decay": 2.0, "norm": 0.25}"#).unwrap();
    let (z, _) = build_initial(&model, &smooth, &evo, 5).unwrap();
    assert!((z.sobolev_norm(1.0) - 0.25).abs() < 1e-15);

    let long_time: InitialData = serde_json::from_str(r#"{"kind": "long_time", "max_mode": 4, "decay": 2.0}"#).unwrap();
    assert!(build_initial(&model, &long_time, &evo, 5).is_err());
}

#[test]
fn simulate_reports_missing_sections() {
    let dir = tempdir().unwrap();
    let err = run_simulate(&config(r#""seed": 0"#), dir.path()).unwrap_err();
    assert_eq!(exit_code(&err), 2);
    let mut cfg = config(
        r#""evolution": {"h": 0.5, "n_steps": 50, "s": 1.0},
           "initial": {"kind": "modes", "modes": [{"mode": [0], "re": 1e30}]}"#,
    );
    cfg.model = ModelSource::Inline(
        serde_json::from_str(
            r#"{"type": "wave", "K": 4, "mass": 1.0,
                "nonlinearity": {"kind": "wave_kick", "coefficients": [0.0, 0.0, 0.0, 0.0, 0.0, -1.0]}}"#,
        )
        .unwrap(),
    );
    match run_simulate(&cfg, dir.path()) {
        Err(e) => assert_eq!(exit_code(&e), 3, "{e}"),
        Ok(_) => panic!("blow-up was not detected"),
    }
}

#[test]
fn scan_flags_exact_resonance() {
    let dir = tempdir().unwrap();
    let cfg =
        config(r#""scan": {"r": 3, "ncap": 2, "gamma": 0.1, "alpha": 1.0, "grid": {"h": [0.1, 3.141592653589793]}}"#);
    run_scan(&cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary = read_json(&dir.path().join("scan_summary.json"));
    assert_eq!(summary["rows"], 2);
    assert_eq!(summary["flagged"], 1);
    assert_eq!(summary["worst_divisor"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["flagged_steps"][0]["witness"], "1:+1;1:+1;2:-1");
    assert!(!summary["frequency_resonances"].as_array().unwrap().is_empty());
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "scan");

    let midpoint =
        config(r#""scan": {"r": 3, "ncap": 2, "gamma": 0.1, "alpha": 1.0, "grid": {"h0": 1.0, "count": 100}}"#);
    run_scan(&midpoint, dir.path()).unwrap();
    let summary = read_json(&dir.path().join("scan_summary.json"));
    assert_eq!(summary["rows"], 100);
    let f = summary["fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
}

#[test]
fn normalform_writes_solution_and_residual() {
    let dir = tempdir().unwrap();
    let model = r#"{"type": "nls", "K": 8, "potential": [[0, 0.5], [1, 0.5], [-1, 0.5], [2, 0.5], [-2, 0.5], [3, 0.5], [-3, 0.5], [4, 0.5], [-4, 0.5]],
        "nonlinearity": {"kind": "nls_gauge", "coefficients": [0.0, 1.0]}}"#;
    let cfg = ExperimentConfig::from_json(
        &format!(r#"{{"model": {model}, "normalform": {{"h": 0.1, "n": 2.0}}}}"#),
        dir.path(),
    )
    .unwrap();
    let mut r = common::rng(4);
    let p = common::random_real_polynomial(&mut r, &[3], 6, 4);
    let poly = dir.path().join("p.json");
    fs::write(&poly, p.to_json()).unwrap();
    run_normalform(&cfg, &poly, dir.path()).unwrap();
    let report = read_json(&dir.path().join("residual.json"));
    assert!(report["relative"].as_f64().unwrap() <= 1e-12);
    assert!(report["support_invariants_hold"].as_bool().unwrap());
    let chi = SparsePolynomial::load(&dir.path().join("chi.json")).unwrap();
    let zed = SparsePolynomial::load(&dir.path().join("zed.json")).unwrap();
    assert_eq!(
        chi.len() + zed.len(),
        report["chi_terms"].as_u64().unwrap() as usize + report["zed_terms"].as_u64().unwrap() as usize
    );
    assert_eq!(read_json(&dir.path().join("manifest.json"))["command"], "normalform");
}

#[test]
fn normalform_resonance_maps_to_exit_four() {
    let dir = tempdir().unwrap();
    let cfg = config(r#""normalform": {"h": 3.141592653589793, "n": 2.0}"#);
    let mut p = SparsePolynomial::new();
    common::add_real_pair(&mut p, MultiIndex::d1(&[(1, 1), (1, 1), (2, -1)]), common::c(1.0, 0.0));
    let poly = dir.path().join("p.json");
    fs::write(&poly, p.to_json()).unwrap();
    let err = run_normalform(&cfg, &poly, dir.path()).unwrap_err();
    assert!(matches!(err, Error::Resonance { .. }), "{err}");
    assert_eq!(exit_code(&err), 4);
    assert!(!dir.path().join("chi.json").exists());
}
