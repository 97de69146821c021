use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cusp-weyl"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const P1: &str = r#"{
    "model": {"power": 1.0},
    "boundary": {"radius": 1.0, "spin": "nontrivial"}
}"#;

#[test]
fn predict_prints_volume_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), P1, &["predict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "regime=VolumeDominated a=2 k=0 C=1.000000");
    let csv = fs::read_to_string(dir.path().join("out/predict.csv")).unwrap();
    assert!(csv.starts_with("regime,a,k,C\nVolumeDominated,2,0,"));
}

#[test]
fn count_without_decay_is_a_hypothesis_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "model": {"power": 0.0},
        "boundary": {"spin": "nontrivial"},
        "count": {"lambdas": [4.0]}
    }"#;
    let o = run(dir.path(), config, &["count"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("p > 0"), "{}", stderr(&o));
}

#[test]
fn zeta_on_zero_mode_boundary_is_a_hypothesis_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "boundary": {"spin": "trivial"},
        "zeta": {"s": [3.0]}
    }"#;
    let o = run(dir.path(), config, &["zeta"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"model": {"power": 1.0, "colour": "red"}}"#;
    let o = run(dir.path(), config, &["predict"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), P1, &["plot"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_section_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), P1, &["count"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("lambda,count,semiclassical,seconds\n");
    for l in [8.0f64, 10.0, 13.0, 16.0, 20.0, 25.0, 32.0] {
        table.push_str(&format!("{},{},{},0\n", l, (l * l).round(), l * l));
    }
    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/count.csv"), table).unwrap();
    let config = r#"{"fit": {"log_power": "zero", "noise": 0.01}}"#;
    let first = run(dir.path(), config, &["--seed", "7", "fit"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let a = fs::read(dir.path().join("out/fit.csv")).unwrap();
    let second = run(dir.path(), config, &["--seed", "7", "fit"]);
    assert!(second.status.success());
    assert_eq!(a, fs::read(dir.path().join("out/fit.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("a_fit,C_fit,k_fit,residual,lambda_min,lambda_max,samples\n"));
    let a_fit: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((a_fit - 2.0).abs() < 0.05, "{a_fit}");
}

#[test]
fn report_has_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("lambda,count,semiclassical,seconds\n");
    for l in [8.0f64, 10.0, 12.0, 15.0, 18.0, 22.0, 27.0, 32.0] {
        table.push_str(&format!("{},{},{},0\n", l, l * l, l * l));
    }
    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/count.csv"), table).unwrap();
    let o = run(dir.path(), P1, &["report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("regime,a_theory,a_fit,C_theory,C_fit,rel_err"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    assert_eq!(row[0], "VolumeDominated");
    let rel: f64 = row[5].parse().unwrap();
    assert!(rel.abs() < 1e-9, "{rel}");
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(md.starts_with("| regime |"));
}

#[test]
fn empty_count_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "model": {"power": 1.0},
        "boundary": {"spin": "nontrivial"},
        "count": {"lambdas": []}
    }"#;
    let o = run(dir.path(), config, &["count"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(dir.path().join("out/count.csv")).unwrap(),
        "lambda,count,semiclassical,seconds\n"
    );
}

#[test]
fn modes_lists_signed_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "boundary": {"radius": 2.0, "spin": "nontrivial"},
        "modes": {"mu_max": 1.0}
    }"#;
    let o = run(dir.path(), config, &["modes"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/modes.csv")).unwrap();
    // (k + 1/2)/2 with |·| <= 1: ±0.25, ±0.75.
    assert_eq!(csv.lines().count(), 5, "{csv}");
}
