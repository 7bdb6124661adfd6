//! End-to-end tests of the `valleon` binary: exit codes, config
//! validation messages, artifact schemas, determinism, and the manifest
//! digest contract.

use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_valleon"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).expect("write config");
    path.display().to_string()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"lattice": {"a_nm": 470.0, "bogus": 1}}"#);
    let out = run(&["bands", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("bogus"));
}

#[test]
fn duplicate_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"lattice": {"t": 1.0, "t": 2.0}}"#);
    let out = run(&["bands", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).to_lowercase().contains("duplicate"));
}

#[test]
fn invalid_values_are_all_reported_with_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"lattice": {"delta": 5.0}, "grid": {"nk": 4}, "fit": {"shape": "wiggle"}}"#,
    );
    let out = run(&["bands", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("lattice.delta"), "missing delta in: {err}");
    assert!(err.contains("grid.nk"), "missing nk in: {err}");
    assert!(err.contains("fit.shape"), "missing shape in: {err}");
}

#[test]
fn missing_fit_input_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "fit",
        tmp.path().join("no-such.csv").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
}

#[test]
fn fit_rejects_svg_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "fit",
        tmp.path().join("no-such.csv").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--format",
        "svg",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("svg"));
}

#[test]
fn malformed_hom_csv_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("hom.csv");
    std::fs::write(&csv, "wrong,header\n1,2\n").unwrap();
    let out = run(&["fit", csv.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("header"));
}

#[test]
fn bands_writes_artifact_and_manifest_digests_match() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = run(&["bands", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let csv = std::fs::read(dir.join("bands.csv")).expect("bands.csv exists");
    let header = String::from_utf8_lossy(&csv);
    assert!(header.starts_with("segment,k_index,kx,ky,E_minus,E_plus\n"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "bands");
    assert_eq!(manifest["artifact_version"], "1");
    let digests = manifest["digests"].as_object().unwrap();
    assert_eq!(digests["bands.csv"].as_str().unwrap(), sha256_hex(&csv));
    // Every digest entry corresponds to an emitted file and vice versa.
    for name in digests.keys() {
        assert!(dir.join(name).is_file(), "missing artifact {name}");
    }
}

#[test]
fn bands_output_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["bands", "--out", d1.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["bands", "--out", d2.to_str().unwrap()]).status.code(), Some(0));
    let b1 = std::fs::read(d1.join("bands.csv")).unwrap();
    let b2 = std::fs::read(d2.join("bands.csv")).unwrap();
    assert_eq!(b1, b2);
}

#[test]
fn ribbon_interface_override_flips_velocity_sign() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out =
        run(&["ribbon", "--interface", "I21", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let branches: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("edge_branches.json")).unwrap())
            .unwrap();
    let arr = branches["branches"].as_array().unwrap();
    assert!(!arr.is_empty());
    let mut saw_velocity = false;
    for b in arr {
        assert_eq!(b["interface"], "I21");
        if let Some(v) = b["velocity_at_K"].as_f64() {
            // Orientation convention: the I21 wall carries K rightward.
            assert!(v > 0.0, "v(K) = {v}");
            saw_velocity = true;
        }
    }
    assert!(saw_velocity, "no branch reported a K velocity");
}

#[test]
fn hom_csv_schema_and_seeded_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (d1, d2, d3) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for d in [&d1, &d2] {
        let out = run(&["hom", "--out", d.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let h1 = std::fs::read_to_string(d1.join("hom.csv")).unwrap();
    let h2 = std::fs::read_to_string(d2.join("hom.csv")).unwrap();
    assert_eq!(h1, h2, "same seed must reproduce counts exactly");

    let mut lines = h1.lines();
    assert_eq!(lines.next(), Some("delay_ps,delay_mm,rate,counts,error"));
    let first = lines.next().expect("data row");
    let cols: Vec<&str> = first.split(',').collect();
    assert_eq!(cols.len(), 5);
    cols[2].parse::<f64>().expect("rate parses");
    cols[3].parse::<u64>().expect("counts parse");

    // A different seed changes counts but not the underlying rates.
    let out = run(&["hom", "--out", d3.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let h3 = std::fs::read_to_string(d3.join("hom.csv")).unwrap();
    assert_ne!(h1, h3);
    let rates = |text: &str| -> Vec<String> {
        text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().to_string()).collect()
    };
    assert_eq!(rates(&h1), rates(&h3));
}

#[test]
fn hom_then_fit_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let hom_dir = tmp.path().join("hom");
    let fit_dir = tmp.path().join("fit");
    let out = run(&["hom", "--out", hom_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let out = run(&[
        "fit",
        hom_dir.join("hom.csv").to_str().unwrap(),
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit_dir.join("fit.json")).unwrap())
            .unwrap();
    let v = fit["visibility"].as_f64().unwrap();
    // Default source has V0 = 0.965; Poisson noise perturbs it slightly.
    assert!((v - 0.965).abs() < 0.05, "visibility {v}");
    assert_eq!(fit["flagged"], false);
    let l = fit["length_c_mm"].as_f64().unwrap();
    assert!((l - 0.299792458 * 4.0).abs() < 0.1, "coherence length {l}");
}

#[test]
fn svg_format_emits_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = run(&["bands", "--out", dir.to_str().unwrap(), "--format", "csv,svg"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let svg = std::fs::read_to_string(dir.join("bands.svg")).expect("bands.svg exists");
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}
