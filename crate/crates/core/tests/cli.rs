use std::fs;
use std::path::PathBuf;
use std::process::Command;

use dirac_anomaly::cli::{run, ExperimentConfig, Mode};
use dirac_anomaly::Error;

const N1: &str = r#"
mode = "local"
n = 1
rank = 1
m = 1

[field]
family = "abelian_n1"
alpha = 0.0
beta = 6.283185307179586
width = 0.2
"#;

const SMALL_SPECTRAL: &str = r#"
mode = "both"
n = 1
rank = 1
m = 1

[field]
family = "abelian_n1"
alpha = 0.0
beta = 6.283185307179586
width = 0.2

[lattice]
length = 24.0
points = 16

[lambda_grid]
min = 0.2
max = 0.4
count = 6
"#;

fn tmp(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    d
}

#[test]
fn local_run_is_byte_identical() {
    let mut cfg = ExperimentConfig::from_toml(N1).unwrap();
    let mut bytes = Vec::new();
    for run_id in ["det_a", "det_b"] {
        cfg.output.dir = tmp(run_id);
        let out = run(&cfg).unwrap();
        assert!((out.local.as_ref().unwrap().value - 1.0).abs() < 1e-8);
        bytes.push(fs::read(cfg.output.dir.join("run_local.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let rec: serde_json::Value = serde_json::from_slice(&bytes[0]).unwrap();
    for key in ["method", "n", "N", "m", "value", "error_estimate", "config_hash"] {
        assert!(rec.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn degree_below_n_names_the_field() {
    let src = N1.replace("n = 1\nrank = 1\nm = 1", "n = 1\nrank = 1\nm = 0");
    match ExperimentConfig::from_toml(&src) {
        Err(Error::Config { field, msg }) => {
            assert_eq!(field, "m");
            assert!(msg.contains("line 5"), "{msg}");
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let src = format!("{N1}\nbogus = 3\n");
    assert!(matches!(ExperimentConfig::from_toml(&src), Err(Error::Parse(_))));
}

#[test]
fn config_hash_is_stable() {
    let a = ExperimentConfig::from_toml(N1).unwrap();
    let reordered = N1.replace("alpha = 0.0\nbeta", "beta").replace("width = 0.2", "width = 0.2\nalpha = 0.0");
    let b = ExperimentConfig::from_toml(&reordered).unwrap();
    assert_eq!(a.config_hash(), b.config_hash());
    assert_eq!(a.config_hash().len(), 64);
    let mut c = a.clone();
    c.output.dir = PathBuf::from("elsewhere");
    assert_eq!(a.config_hash(), c.config_hash());
    let d = ExperimentConfig::from_toml(&N1.replace("width = 0.2", "width = 0.25")).unwrap();
    assert_ne!(a.config_hash(), d.config_hash());
}

#[test]
fn spectral_limits_are_validated() {
    let too_far = SMALL_SPECTRAL.replace("max = 0.4", "max = 5.0");
    match ExperimentConfig::from_toml(&too_far) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "max"),
        other => panic!("{other:?}"),
    }
    let too_big = SMALL_SPECTRAL.replace("points = 16", "points = 96");
    match ExperimentConfig::from_toml(&too_big) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "storage"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn compare_writes_all_artifacts() {
    let mut cfg = ExperimentConfig::from_toml(SMALL_SPECTRAL).unwrap();
    cfg.output.dir = tmp("compare");
    let out = run(&cfg).unwrap();
    assert!(out.comparison.is_some());
    let csv = fs::read_to_string(cfg.output.dir.join("run_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,m,value,fitted,cg_iters_total,wall_time");
    assert_eq!(lines.count(), 6);
    for f in ["run_local.json", "run_spectral.json", "run_compare.json"] {
        assert!(cfg.output.dir.join(f).exists(), "{f}");
    }
    let hash = cfg.config_hash();
    assert_eq!(out.spectral.unwrap().config_hash, hash);
}

#[test]
fn checks_mode_runs_one_suite() {
    let src = "mode = \"checks\"\nn = 1\nrank = 1\nm = 1\nchecks = [\"clifford\"]\n[field]\nfamily = \"zero\"\n";
    let mut cfg = ExperimentConfig::from_toml(src).unwrap();
    assert_eq!(cfg.mode, Mode::Checks);
    cfg.output.dir = tmp("checks");
    let out = run(&cfg).unwrap();
    assert!(out.success());
    assert_eq!(out.checks.unwrap().suites.len(), 1);
}

#[test]
fn binary_check_and_errors() {
    let bin = env!("CARGO_BIN_EXE_dirac");
    let dir = tmp("bin");
    let ok = Command::new(bin)
        .args(["check", "trace_lemma", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS trace_lemma"));
    let bad = Command::new(bin).args(["check", "nonsense", "--out"]).arg(&dir).output().unwrap();
    assert!(!bad.status.success());
    let missing = Command::new(bin).args(["anomaly", "local"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
