use std::path::PathBuf;

use hybridfp::config::{load_scenario, ScenarioConfig};
use hybridfp::model::CflMode;
use hybridfp::Error;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_reference_config_matches_defaults() {
    let cfg = ScenarioConfig::load(&configs_dir().join("reference.cfg")).unwrap();
    assert_eq!(cfg, ScenarioConfig::default());
    assert_eq!(cfg.n_a, 201);
    assert_eq!(cfg.n_steps, 20000);
    assert_eq!(cfg.epsilon, 0.05);
    assert_eq!(cfg.cfl_mode, CflMode::Error);
}

#[test]
fn desk_config_differs_only_in_resolution() {
    let cfg = ScenarioConfig::load(&configs_dir().join("desk.cfg")).unwrap();
    let expected = ScenarioConfig {
        n_a: 101,
        n_b: 101,
        n_c: 101,
        n_steps: 5000,
        snapshot_stride: 500,
        ..ScenarioConfig::default()
    };
    assert_eq!(cfg, expected);
    let s = cfg.build().unwrap();
    assert_eq!(s.dt(), 1e-3);
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        alpha1: 1.75,
        sigma2: 0.0123456789,
        seed: 99,
        cfl_mode: CflMode::Warn,
        ..ScenarioConfig::default()
    };
    let path = dir.path().join("x.cfg");
    std::fs::write(&path, cfg.to_ini()).unwrap();
    assert_eq!(ScenarioConfig::load(&path).unwrap(), cfg);
}

#[test]
fn empty_file_builds_the_reference_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.cfg");
    std::fs::write(&path, "").unwrap();
    let s = load_scenario(&path).unwrap();
    assert_eq!(s.n_steps(), 20000);
    assert_eq!(s.modes().len(), 2);
}

#[test]
fn cfl_violation_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fast.cfg");
    std::fs::write(&path, "[run]\nn_steps = 100\n").unwrap();
    let err = load_scenario(&path).unwrap_err();
    assert!(err.is_validation(), "{err}");

    std::fs::write(&path, "[run]\nn_steps = 100\ncfl_mode = warn\n").unwrap();
    assert!(load_scenario(&path).is_ok());
}

#[test]
fn missing_file_is_io() {
    let err = load_scenario(&configs_dir().join("absent.cfg")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
    assert!(!err.is_validation());
}
