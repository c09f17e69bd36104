//! Configuration validation, the runner and the command-line binary.

use lfpp::error::LfppError;
use lfpp::expcli::{run_experiment, validate_config, ExperimentConfig, ExperimentKind, RunManifest};
use std::fs;
use std::path::Path;
use std::process::Command;

fn config_errors(text: &str) -> Vec<String> {
    match validate_config(text, Some(ExperimentKind::Crossing)) {
        Err(LfppError::Config(v)) => v,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn empty_config_takes_defaults() {
    let c = validate_config("", Some(ExperimentKind::Quantiles)).unwrap();
    assert_eq!(c, ExperimentConfig::new(ExperimentKind::Quantiles));
    assert_eq!(c.seed, 0);
    let echoed = validate_config(&c.to_toml(), None).unwrap();
    assert_eq!(echoed, c);
    assert_eq!(echoed.config_hash(), c.config_hash());
}

#[test]
fn kinds_round_trip() {
    for k in ExperimentKind::ALL {
        assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
    }
    assert!("bogus".parse::<ExperimentKind>().is_err());
    let errs = match validate_config("", None) {
        Err(LfppError::Config(v)) => v,
        other => panic!("{other:?}"),
    };
    assert!(errs.iter().any(|e| e.starts_with("kind")), "{errs:?}");
}

#[test]
fn negative_gamma_is_rejected() {
    let errs = config_errors("[field]\ngamma = -1.0\n");
    assert!(errs.iter().any(|e| e.contains("gamma must be ≥ 0")), "{errs:?}");
}

#[test]
fn resolution_rule_is_enforced() {
    let errs = config_errors("[field]\nn_max = 10\ngrid = 256\n");
    assert!(errs.iter().any(|e| e.starts_with("field.grid: resolution rule") && e.contains("4096")), "{errs:?}");
}

#[test]
fn all_problems_are_reported_together() {
    let errs = config_errors("colour = 1\n[field]\ngamma = \"x\"\nwidth = 3\n[stats]\nepsilon = 0.7\n[bogus]\n");
    assert!(errs.iter().any(|e| e.contains("colour")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("field.width")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("field.gamma")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("bogus")), "{errs:?}");
    assert!(errs.len() >= 4, "{errs:?}");
}

#[test]
fn hash_ignores_seed_only() {
    let a = validate_config("seed = 1\n", Some(ExperimentKind::Rsw)).unwrap();
    let b = validate_config("seed = 2\n", Some(ExperimentKind::Rsw)).unwrap();
    let c = validate_config("seed = 1\n[stats]\nepsilon = 0.1\n", Some(ExperimentKind::Rsw)).unwrap();
    assert_eq!(a.config_hash(), b.config_hash());
    assert_ne!(a.config_hash(), c.config_hash());
}

#[test]
fn resource_ceiling_is_enforced() {
    let errs = config_errors("[limits]\nmax_grid_nodes = 1000\n");
    assert!(!errs.is_empty());
}

const SMALL: &str = "seed = 5\n[field]\ngamma = 0.3\nn_min = 1\nn_max = 2\ngrid = 16\n[samples]\ncount = 200\n[crossing]\nidentity_samples = 3\n";

fn csv_bytes(dir: &Path, manifest: &RunManifest) -> Vec<(String, Vec<u8>)> {
    manifest.files.keys().filter(|f| f.ends_with(".csv")).map(|f| (f.clone(), fs::read(dir.join(f)).unwrap())).collect()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::Crossing, ExperimentKind::Rsw, ExperimentKind::Perco] {
        let text = format!("{SMALL}[perco]\nk_values = [2, 3]\nthreshold_samples = 200\n");
        let c = validate_config(&text, Some(kind)).unwrap();
        let (a, b) = (tmp.path().join(format!("{kind}-a")), tmp.path().join(format!("{kind}-b")));
        let ma = run_experiment(&c, &a).unwrap();
        let mb = run_experiment(&c, &b).unwrap();
        assert_eq!(csv_bytes(&a, &ma), csv_bytes(&b, &mb), "{kind}");
        for (name, digest) in &ma.files {
            if name.ends_with(".csv") {
                assert_eq!(mb.files[name], *digest);
            }
        }
    }
}

#[test]
fn artifacts_carry_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let c = validate_config(SMALL, Some(ExperimentKind::Crossing)).unwrap();
    let m = run_experiment(&c, tmp.path()).unwrap();
    for f in ["results.csv", "summary.json", "effective_config.toml"] {
        assert!(m.files.contains_key(f), "{f}");
    }
    let text = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    let hash = c.config_hash();
    assert!(text.lines().next().unwrap().starts_with("seed,config_hash,"));
    assert!(text.lines().skip(1).all(|l| l.starts_with(&format!("5,{hash},"))));
    assert_eq!(text.lines().count(), 1 + 2 * 200);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config_hash, hash);
    assert_eq!(manifest.seed, 5);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "crossing");
    assert!(summary["verdicts"].as_array().unwrap().len() >= 6);
    let echoed = validate_config(&fs::read_to_string(tmp.path().join("effective_config.toml")).unwrap(), None).unwrap();
    assert_eq!(echoed, c);
}

#[test]
fn field_dumps_are_written() {
    let tmp = tempfile::tempdir().unwrap();
    let c = validate_config(&format!("{SMALL}[output]\ndump_fields = 2\n"), Some(ExperimentKind::Crossing)).unwrap();
    let m = run_experiment(&c, tmp.path()).unwrap();
    for i in 0..2 {
        let name = format!("fields/field_{i:04}.bin");
        assert!(m.files.contains_key(&name));
        let f = lfpp::synth::read_field(&tmp.path().join(&name)).unwrap();
        assert_eq!(f.band.1, 2);
    }
}

fn lfpp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfpp"))
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[field]\ngamma = -1.0\n").unwrap();
    let out = lfpp().args(["crossing", "--config"]).arg(&bad).arg("--out").arg(tmp.path().join("x")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma must be ≥ 0"));

    let good = tmp.path().join("good.toml");
    fs::write(&good, "").unwrap();
    let dir = tmp.path().join("spectral");
    let out = lfpp().args(["spectral-check", "--strict", "--workers", "1", "--seed", "3", "--config"]).arg(&good).arg("--out").arg(&dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[field]") && stdout.contains("gamma = 0.2"), "{stdout}");
    assert!(dir.join("manifest.json").exists());
    assert!(fs::read_to_string(dir.join("results.csv")).unwrap().lines().nth(1).unwrap().starts_with("3,"));
}

#[test]
fn sample_counts_meet_estimator_minimums() {
    let errs = match validate_config("[samples]\ncount = 500\n", Some(ExperimentKind::Tails)) {
        Err(LfppError::Config(v)) => v,
        other => panic!("{other:?}"),
    };
    assert!(errs.iter().any(|e| e.contains("at least 1000")), "{errs:?}");
    assert!(config_errors("[samples]\ncount = 100\n").iter().any(|e| e.contains("at least 200")));
}
