//! End-to-end tests of the `lab` binary: exit codes, output files,
//! reproducibility, and the JSON manifest mode.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("lab binary should spawn")
}

const FAST_SPECTRUM: &str = r#"
[domain]
family = "disk"
radius = 1.0

[solve]
k = 4
h = 0.1
"#;

#[test]
fn spectrum_succeeds_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST_SPECTRUM);
    let (out_a, out_b) = (tmp.path().join("a"), tmp.path().join("b"));

    for out in [&out_a, &out_b] {
        let o = run(lab().args([
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }

    let csv_a = fs::read(out_a.join("results.csv")).unwrap();
    let csv_b = fs::read(out_b.join("results.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b, "results.csv must be reproducible byte for byte");

    // Manifests agree except for wall-clock fields (timestamp, stage times).
    let mut m_a: serde_json::Value =
        serde_json::from_slice(&fs::read(out_a.join("manifest.json")).unwrap()).unwrap();
    let mut m_b: serde_json::Value =
        serde_json::from_slice(&fs::read(out_b.join("manifest.json")).unwrap()).unwrap();
    for m in [&mut m_a, &mut m_b] {
        let obj = m.as_object_mut().unwrap();
        obj.remove("timestamp");
        obj.remove("stages");
    }
    assert_eq!(m_a, m_b);
    assert_eq!(m_a["command"], "spectrum");
    assert_eq!(m_a["seed"], 7, "default seed comes from [solve] seed");
}

#[test]
fn json_flag_prints_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST_SPECTRUM);
    let out = tmp.path().join("out");

    let o = run(lab().args([
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).expect("stdout is JSON");
    assert_eq!(m["command"], "spectrum");
    assert!(m["checks"].as_array().is_some_and(|c| !c.is_empty()));
    assert!(m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "results.csv"));
}

#[test]
fn invalid_config_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    // Dumbbell with fillet scale not exceeding the half-width is rejected.
    let cfg = write_config(
        tmp.path(),
        r#"
[domain]
family = "dumbbell"
eps = 0.3
xi = 0.2
"#,
    );
    let o = run(lab().args([
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lab:"));
}

#[test]
fn unresolvable_request_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    // Far more eigenpairs than the coarse mesh has interior vertices.
    let cfg = write_config(
        tmp.path(),
        r#"
[domain]
family = "disk"

[solve]
k = 200
h = 0.8
"#,
    );
    let o = run(lab().args([
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn injected_eigenvalue_shift_makes_validate_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(lab()
        .args(["validate", "--out", tmp.path().join("out").to_str().unwrap()])
        .env("LAB_INJECT_EIGEN_SHIFT", "0.05"));
    assert_eq!(o.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("FAIL fem_accuracy"),
        "the shifted eigenvalues must fail exactly the accuracy criterion: {stdout}"
    );
    // The injection must not leak into unrelated criteria.
    assert!(stdout.contains("PASS courant_audit"), "{stdout}");
}
