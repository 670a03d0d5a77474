use std::fs;
use std::path::Path;
use std::process::Command;

use quetron_core::kinetic::extract_generalized_network;
use quetron_core::liouvillian::read_matrix_csv;

fn quetron(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_quetron"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const LINE_SPEC: &str = r#"
n = 3
energies = [0.0, 0.5, 1.0]
dephasing = [1.0, 1.0, 1.0]
couplings = [{ i = 1, j = 2, re = 0.01 }, { i = 2, j = 3, re = 0.02 }]
"#;

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let o = quetron(&["chain", "--family", "chain-random", "--seed", "11"], &dir.path().join(sub));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["chain-random_n6_scaling.csv", "chain-random_n6_slopes.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn outputs_carry_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = quetron(&["fmo-sweep", "--grid", "1", "1000", "4"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("fmo_sweep.csv")).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# quetron ") && first.contains("config-sha256="));
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn dumped_liouvillian_reduces_to_dumped_network() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("line.toml");
    fs::write(&spec, LINE_SPEC).unwrap();
    let o = quetron(
        &["simulate", "--spec", spec.to_str().unwrap(), "--dump-m", "--dump-n"],
        &dir.path().join("out"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_matrix_csv(&fs::read_to_string(dir.path().join("out/M.csv")).unwrap()).unwrap();
    let n = read_matrix_csv(&fs::read_to_string(dir.path().join("out/N.csv")).unwrap()).unwrap();
    let extracted = extract_generalized_network(&m).unwrap().matrix;
    assert!((extracted - &n).norm() <= 1e-11 * n.norm());
}

#[test]
fn zero_dephasing_skips_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    fs::write(&spec, LINE_SPEC.replace("dephasing = [1.0, 1.0, 1.0]", "dephasing = [1.0, 0.0, 1.0]")).unwrap();
    let o = quetron(&["bounds-report", "--spec", spec.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let checks = fs::read_to_string(dir.path().join("out/bound_checks.csv")).unwrap();
    assert_eq!(checks.matches(",skipped,").count(), 4);
    assert!(checks.contains("dephasing"));
}

#[test]
fn complex_couplings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    fs::write(&spec, LINE_SPEC.replace("re = 0.01 }", "re = 0.01, im = 0.005 }")).unwrap();
    let o = quetron(&["bounds-report", "--spec", spec.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("real couplings"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = quetron(&["ideal-network", "--grid", "1e-3", "2e-3", "9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = quetron(&["dim-scan", "--family", "chain-random"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = quetron(&["simulate", "--spec", "/nonexistent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_report_passes_on_ideal_network() {
    let dir = tempfile::tempdir().unwrap();
    let o = quetron(&["bounds-report", "--family", "highly-ideal", "--n", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("bound_report.txt")).unwrap();
    let parsed = quetron_core::BoundReport::from_key_value(&report).unwrap();
    assert_eq!(parsed.n, 5);
}
