use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use blowup_cli::output::{manifest_files, CLASSIFICATION, CURVE, MANIFEST, TIMING};
use blowup_cli::{run_pipeline, RunConfig, OUTPUT_ROOT_ENV};
use blowup_core::classifier::Verdict;

fn blowup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml")).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_ODE: &str = r#"
name = "small-ode"
params = { p = 3.0, n = 3 }

[grid]
r_max = 2.0
nodes = 201

[initial]
generator = "constant-ode"
blowup_time = 1.0

[probes]
radii = [0.3, 1.0]
auto = false
"#;

#[test]
fn zero_data_writes_an_empty_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("zero");
    let run = blowup(&["run", &config("zero"), "-o", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("no blow-up recorded"));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["blowup"], false);
    assert_eq!(manifest["probes"].as_array().unwrap().len(), 0);
    assert!(out.join(TIMING).is_file());

    let plot = blowup(&["plot", out.to_str().unwrap()]);
    assert!(plot.status.success());
    assert!(String::from_utf8_lossy(&plot.stderr).contains("notice"));
    assert!(!out.join("plot").exists());
}

#[test]
fn plotting_a_missing_bundle_is_a_notice() {
    let tmp = tempfile::tempdir().unwrap();
    let plot = blowup(&["plot", tmp.path().join("absent").to_str().unwrap()]);
    assert!(plot.status.success());
    assert!(plot.stdout.is_empty());
    assert!(String::from_utf8_lossy(&plot.stderr).contains("no bundle"));
}

#[test]
fn unknown_generator_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "bad.toml", &SMALL_ODE.replace("constant-ode", "sawtooth"));
    for cmd in ["run", "validate"] {
        let out = blowup(&[cmd, path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("sawtooth"), "{cmd}");
    }
}

#[test]
fn validate_reports_the_generator() {
    let out = blowup(&["validate", &config("plateau-pair")]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("plateau-pair on 751 nodes"));
}

#[test]
fn manifest_checksums_match_the_files() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "ode.toml", SMALL_ODE);
    let out = tmp.path().join("bundle");
    let run = blowup(&["run", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let files = manifest_files(&out).unwrap();
    let names: Vec<&str> = files.iter().map(|(_, f)| f.path.as_str()).collect();
    assert!(names.contains(&CURVE) && names.contains(&CLASSIFICATION));
    assert!(names.contains(&"probes/r1.0000_lyapunov.csv"));
    assert!(!names.contains(&TIMING));
    for (path, entry) in files {
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), entry.bytes, "{}", entry.path);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), entry.sha256, "{}", entry.path);
    }

    let plot = blowup(&["plot", out.to_str().unwrap()]);
    assert!(plot.status.success());
    for name in ["curve.dat", "r1.0000_lyapunov.dat", "r1.0000_residual.dat"] {
        assert!(out.join("plot").join(name).is_file(), "{name}");
    }
}

#[test]
fn output_root_prefixes_relative_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "ode.toml", SMALL_ODE);
    let run = Command::new(env!("CARGO_BIN_EXE_blowup"))
        .args(["run", path.to_str().unwrap()])
        .env(OUTPUT_ROOT_ENV, tmp.path().join("root"))
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(tmp.path().join("root/small-ode").join(MANIFEST).is_file());
}

#[test]
fn a_failing_probe_leaves_the_others_intact() {
    let base = RunConfig::parse(SMALL_ODE, Path::new(".")).unwrap();
    let alone = run_pipeline(&base).unwrap();
    let mut with_bad = base.clone();
    // too close to the axis for any similarity window
    with_bad.probes.radii.push(0.02);
    let mixed = run_pipeline(&with_bad).unwrap();
    let bad = mixed.probes.iter().find(|p| (p.r0 - 0.02).abs() < 1e-9).unwrap();
    assert!(!bad.errors.is_empty());
    for probe in &alone.probes {
        let same = mixed.probes.iter().find(|p| p.r0 == probe.r0).unwrap();
        assert_eq!(serde_json::to_string(probe).unwrap(), serde_json::to_string(same).unwrap());
        assert_eq!(same.verdict(), Verdict::NonCharacteristic);
    }
}
