//! Runner-level acceptance gates: report determinism (criterion 15), exit
//! codes, and fault injection through the suite.

use cubelab_cli::{parse_config, run, run_suite, suite_csv, SuiteManifest};
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cubelab")
}

/// Criterion 15: re-running any acceptance config with the same seed
/// reproduces the JSON report byte-identically, excluding timestamps.
#[test]
fn criterion_15_report_determinism() {
    let manifest_path = configs_dir().join("acceptance.toml");
    let text = std::fs::read_to_string(&manifest_path).unwrap();
    let manifest: SuiteManifest = toml::from_str(&text).unwrap();
    for rel in &manifest.runs {
        let path = configs_dir().join(rel);
        let config = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let first = run(&config).unwrap().canonical_bytes().unwrap();
        let second = run(&config).unwrap().canonical_bytes().unwrap();
        assert_eq!(
            first,
            second,
            "report for {} is not reproducible",
            rel.display()
        );
        println!("PASS criterion-15 determinism: {}", rel.display());
    }
}

#[test]
fn seed_changes_the_report() {
    let path = configs_dir().join("gowers_signs_n64_k3.toml");
    let mut config = parse_config(&std::fs::read_to_string(path).unwrap()).unwrap();
    let a = run(&config).unwrap().canonical_bytes().unwrap();
    config.seed += 1;
    let b = run(&config).unwrap().canonical_bytes().unwrap();
    assert_ne!(a, b, "different seeds should give different sign tables");
}

#[test]
fn exit_codes_and_verdicts() {
    // Passing config: exit 0.
    let ok = Command::new(bin())
        .args(["gowers", "--config"])
        .arg(configs_dir().join("gowers_quad_u3.toml"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&ok.stderr));

    // Check failure: the coboundary nilcycle against the untwisted
    // extension fails equivariance, exit 1.
    let fail = Command::new(bin())
        .args(["nilcycle", "verify", "--config"])
        .arg(configs_dir().join("verify_mutation.toml"))
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&fail.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let equiv = checks.iter().find(|c| c["name"] == "equivariance").unwrap();
    assert_eq!(equiv["pass"], serde_json::Value::Bool(false));
    assert!(equiv["value"].as_f64().unwrap() > 0.1);

    // Config error: exit 2 with a diagnostic naming the offending field.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "experiment = \"gowers\"\nseed = 1\nbogus_field = 3\n").unwrap();
    let err = Command::new(bin())
        .args(["gowers", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("bogus_field"));

    // Mismatched subcommand is a config error too.
    let err = Command::new(bin())
        .args(["avg", "--config"])
        .arg(configs_dir().join("gowers_quad_u3.toml"))
        .output()
        .unwrap();
    assert_eq!(err.status.code(), Some(2));

    // Missing required field.
    let bad = dir.path().join("missing.toml");
    std::fs::write(
        &bad,
        "experiment = \"gowers\"\nseed = 1\n[system]\nsystem = \"cyclic\"\nn = 8\n",
    )
    .unwrap();
    let err = Command::new(bin())
        .args(["gowers", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("`k`"));
}

#[test]
fn suite_empty_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();

    // Empty manifest: empty summary, exit 0.
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "runs = []\n").unwrap();
    let out = Command::new(bin())
        .args(["suite", "--config"])
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    // A manifest with one failing config: exactly that row fails, exit 1.
    let manifest = dir.path().join("mixed.toml");
    let good = configs_dir().join("nrp_z7.toml");
    let bad = configs_dir().join("verify_mutation.toml");
    std::fs::write(
        &manifest,
        format!("runs = [{:?}, {:?}]\n", good.display().to_string(), bad.display().to_string()),
    )
    .unwrap();
    let report = run_suite(&manifest).unwrap();
    assert!(!report.all_pass);
    assert_eq!(report.runs.len(), 2);
    assert!(report.runs[0].pass);
    assert!(!report.runs[1].pass);
    let csv = suite_csv(&report);
    assert!(csv.lines().count() > 2);

    let out = Command::new(bin())
        .args(["suite", "--config"])
        .arg(&manifest)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn list_checks_prints_identities() {
    let out = Command::new(bin()).arg("--list-checks").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rho(b || c) = rho(b) + rho(c)"));
    assert!(text.contains("tricube_sum"));
}

#[test]
fn csv_and_report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let csv_path = dir.path().join("rows.csv");
    let mut config = parse_config(
        &std::fs::read_to_string(configs_dir().join("gowers_quad_u3.toml")).unwrap(),
    )
    .unwrap();
    config.out = Some(report_path.clone());
    config.csv = Some(csv_path.clone());
    let report = run(&config).unwrap();
    assert!(report.all_pass());
    let on_disk: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(on_disk["experiment"], "gowers");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("method,k,N,value,stderr,samples,seed"));
    assert!(csv.lines().count() >= 3);
}
