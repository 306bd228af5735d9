use std::path::Path;

use lowswitch::agent::RunLog;
use lowswitch::harness::runlog::{csv_string, read_csv};
use lowswitch::harness::stats::{line_fit, median, origin_fit};
use lowswitch::harness::{
    env_registry, read_run, run_experiment, summarize, uniform_random_baseline, write_experiment, write_run, EnvSpec,
    ExperimentConfig, SummaryError,
};

const CHAIN: &str = r#"{
    "env": {"name": "chain", "n": 3, "horizon": 2, "gap": 0.3},
    "agent": {"estimator": "model_free", "beta": {"kind": "fixed", "value": 0.5}},
    "k_grid": [8, 16, 32],
    "seeds": [1, 2],
    "baselines": ["always_switch", "uniform_random"]
}"#;

fn synthetic(variant: &str, episodes: usize, seed: u64, switches: u64, regret: f64) -> RunLog {
    let env = EnvSpec::Chain {
        n: 3,
        horizon: 2,
        gap: 0.3,
    }
    .build(Path::new("."))
    .unwrap();
    let mut log = uniform_random_baseline(&env, episodes, seed);
    log.summary.variant = variant.into();
    log.summary.n_switch_ds = switches;
    log.summary.final_regret = regret;
    log
}

#[test]
fn run_logs_round_trip_through_disk() {
    let cfg = ExperimentConfig::from_json(CHAIN).unwrap();
    let logs = run_experiment(&cfg, Path::new(".")).unwrap();
    assert_eq!(logs.len(), 3 * 2 * 3);
    let dir = tempfile::tempdir().unwrap();
    for log in &logs {
        let path = write_run(dir.path(), log).unwrap();
        let back = read_run(&path).unwrap();
        assert_eq!(&back, log);
        assert_eq!(back.config_hash, cfg.hash());
    }
}

#[test]
fn csv_text_round_trips() {
    let cfg = ExperimentConfig::from_json(CHAIN).unwrap();
    let log = &run_experiment(&cfg, Path::new(".")).unwrap()[0];
    let text = csv_string(&log.records);
    assert_eq!(text.lines().count(), log.records.len() + 1);
    assert_eq!(read_csv(text.as_bytes()).unwrap(), log.records);
}

#[test]
fn config_hash_is_stable_and_sensitive() {
    let a = ExperimentConfig::from_json(CHAIN).unwrap();
    let b = ExperimentConfig::from_json(CHAIN).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = ExperimentConfig::from_json(&CHAIN.replace("0.3", "0.4")).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn bad_configs_name_the_offending_field() {
    let err = ExperimentConfig::from_json(&CHAIN.replace("[8, 16, 32]", "[8, 0, 32]")).unwrap_err();
    assert_eq!(err.path, "k_grid[1]");
    assert!(ExperimentConfig::from_json(&CHAIN.replace("\"gap\"", "\"gapp\"")).is_err());
    let cfg = ExperimentConfig::from_json(&CHAIN.replace("\"gap\": 0.3", "\"gap\": 1.5")).unwrap();
    assert!(run_experiment(&cfg, Path::new(".")).is_err());
}

#[test]
fn summary_recovers_a_log_squared_slope() {
    let mut logs = Vec::new();
    for e in 4..=12 {
        let k = 1usize << e;
        let switches = 3.0 * (k as f64).ln().powi(2);
        for seed in 0..3 {
            logs.push(synthetic("agent", k, seed, switches.round() as u64, 0.0));
        }
    }
    // Rounding to whole switches perturbs the fit slightly.
    let s = summarize(&logs).unwrap();
    assert_eq!(s.variants.len(), 1);
    let fit = &s.variants[0].switch_fit;
    assert!((fit.slope - 3.0).abs() < 1e-2, "{fit:?}");
    assert!(fit.r2 > 0.9999);
    assert!(s.variants[0].zero_regret);
    assert_eq!(s.zero_regret_runs.len(), logs.len());
}

#[test]
fn exact_log_squared_data_fits_exactly() {
    let x: Vec<f64> = (4..=12).map(|e| ((1u64 << e) as f64).ln().powi(2)).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
    let fit = line_fit(&x, &y);
    assert!((fit.slope - 3.0).abs() < 1e-9);
    assert!(fit.intercept.abs() < 1e-9);
    assert!((fit.r2 - 1.0).abs() < 1e-12);
    let fit = origin_fit(&x, &y);
    assert!((fit.slope - 3.0).abs() < 1e-12);
}

#[test]
fn constant_switch_counts_have_unit_r2() {
    let logs: Vec<RunLog> = [16, 32, 64].iter().map(|&k| synthetic("agent", k, 0, 5, 1.0)).collect();
    let s = summarize(&logs).unwrap();
    let v = &s.variants[0];
    assert_eq!(v.switch_fit.r2, 1.0);
    assert_eq!(v.switch_fit.slope, 0.0);
    assert!(!v.zero_regret);
    assert!(s.zero_regret_runs.is_empty());
}

#[test]
fn summary_needs_two_episode_counts() {
    let logs = vec![synthetic("agent", 16, 0, 1, 0.0), synthetic("agent", 16, 1, 1, 0.0)];
    assert_eq!(summarize(&logs).unwrap_err(), SummaryError::InsufficientData(1));
}

#[test]
fn single_cell_writes_one_run_and_no_summary() {
    let json = CHAIN
        .replace("[8, 16, 32]", "[8]")
        .replace("[1, 2]", "[5]")
        .replace(r#"["always_switch", "uniform_random"]"#, "[]");
    let cfg = ExperimentConfig::from_json(&json).unwrap();
    let logs = run_experiment(&cfg, Path::new(".")).unwrap();
    assert_eq!(logs.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    assert!(write_experiment(&logs, dir.path()).unwrap().is_none());
    assert!(dir.path().join("agent_K8_seed5.csv").exists());
    assert!(dir.path().join("agent_K8_seed5.json").exists());
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn sweeps_write_a_summary() {
    let cfg = ExperimentConfig::from_json(CHAIN).unwrap();
    let logs = run_experiment(&cfg, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = write_experiment(&logs, dir.path()).unwrap().unwrap();
    assert_eq!(summary.variants.len(), 3);
    assert!(dir.path().join("summary.json").exists());
    let always = summary.variants.iter().find(|v| v.variant == "always_switch").unwrap();
    for p in &always.points {
        assert_eq!(p.median_switch_ds, p.episodes as f64);
    }
}

#[test]
fn registry_entries_build_from_examples() {
    let names: Vec<&str> = env_registry().iter().map(|e| e.name).collect();
    for name in [
        "chain",
        "riverswim",
        "random_gapped",
        "mixture",
        "file",
        "inline",
        "inline_mixture",
    ] {
        assert!(names.contains(&name), "{name}");
    }
    let specs = [
        r#"{"name": "chain", "n": 4, "horizon": 3, "gap": 0.2}"#,
        r#"{"name": "riverswim", "n": 5, "horizon": 6}"#,
        r#"{"name": "random_gapped", "n_states": 2, "n_actions": 2, "horizon": 2, "gap_min": 0.05, "seed": 1}"#,
        r#"{"name": "mixture", "d": 2, "n_states": 3, "n_actions": 2, "horizon": 2, "seed": 1}"#,
    ];
    for text in specs {
        let spec: EnvSpec = serde_json::from_str(text).unwrap();
        let env = spec.build(Path::new(".")).unwrap();
        assert!(env.mdp().horizon() >= 2);
    }
}

#[test]
fn file_environments_resolve_relative_to_the_config() {
    use lowswitch::mdp::MdpFile;
    let dir = tempfile::tempdir().unwrap();
    let mdp = lowswitch::harness::chain(3, 2, 0.3).unwrap();
    std::fs::write(
        dir.path().join("m.json"),
        serde_json::to_string(&MdpFile::from_mdp(&mdp)).unwrap(),
    )
    .unwrap();
    let spec: EnvSpec = serde_json::from_str(r#"{"name": "file", "path": "m.json"}"#).unwrap();
    let env = spec.build(dir.path()).unwrap();
    assert_eq!(env.mdp(), &mdp);
    assert!(spec.build(Path::new("/nonexistent")).is_err());
}

#[test]
fn median_examples() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
}
