//! End-to-end checks of the command-line interface: exit codes, output
//! files, and byte-level determinism of repeated sweeps.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotocav"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch binary")
}

#[test]
fn point_with_defaults_succeeds() {
    let out = run(bin().args(["point"]));
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("E_N"), "{stdout}");
    assert!(stdout.contains("eta_minus"), "{stdout}");
}

#[test]
fn point_with_solver_cross_check_succeeds() {
    let out = run(bin().args(["point", "--verify-solvers"]));
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "bogus = 1\n");
    let out = run(bin().args(["point", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bogus"), "{stderr}");
}

#[test]
fn invalid_parameter_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "neg.toml", "M = -1.0\n");
    let out = run(bin().args(["point", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("M"), "{stderr}");
}

#[test]
fn missing_config_file_exits_one() {
    let out = run(bin().args(["point", "--config", "/nonexistent/nope.toml"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    // strong driving defeats the effective-frequency iteration
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hot.toml", "P_in = 1.0\n");
    let out = run(bin().args(["point", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn sweep_without_axis_exits_one() {
    let out = run(bin().args(["sweep"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stability_prints_verdict() {
    let out = run(bin().args(["stability"]));
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("routh_hurwitz_pass = true"), "{stdout}");
    assert!(stdout.contains("bistability_roots"), "{stdout}");
}

#[test]
fn verify_subcommand_passes() {
    let out = run(bin().args(["verify", "--seed", "11", "--instances", "5", "--rh-draws", "100"]));
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("verdict                     = PASS"), "{stdout}");
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.toml",
        "T = 0.001\n[sweep]\naxis = \"temperature\"\nmin = 0.001\nmax = 50.0\npoints = 7\n",
    );
    for prefix in ["a", "b"] {
        let out = run(bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(prefix)));
        assert!(out.status.success(), "{out:?}");
    }
    for ext in [".csv", ".svg", ".provenance.toml"] {
        let a = fs::read(dir.path().join(format!("a{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b{ext}"))).unwrap();
        assert_eq!(a, b, "{ext} differs between runs");
        assert!(!a.is_empty());
    }
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.starts_with("axis_value,a_s,G,stable,omega_eff,nbar,T_eff,eta_minus,E_N,nu_min\n"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn cli_sweep_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args([
            "sweep",
            "--axis",
            "temperature",
            "--min",
            "0.001",
            "--max",
            "1.0",
            "--points",
            "3",
            "--out",
        ])
        .arg(dir.path().join("t")));
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn unknown_axis_exits_one() {
    let out = run(bin().args([
        "sweep", "--axis", "volume", "--min", "0", "--max", "1", "--points", "2",
    ]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("volume"), "{stderr}");
}
