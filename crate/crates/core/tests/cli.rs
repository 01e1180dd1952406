use std::path::Path;
use std::process::Command;

fn cetm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cetm")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn dayahead_succeeds_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = cetm(&["dayahead", "--seed", "3", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ce_elastic"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"delta": 1.5}"#).unwrap();
    let o = cetm(&["dayahead", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
}

#[test]
fn unknown_config_field_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"not_a_field": 1}"#).unwrap();
    let o = cetm(&["gen", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn negative_kappa_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cetm(&["realtime", "--kappa", "-0.5", "--runs", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn realtime_is_reproducible_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = cetm(&["realtime", "--seed", "9", "--runs", "20", "--kappa", "0.5", "--out", &out_arg(d.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["runs.csv", "histogram.csv", "billing.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn strict_matrix_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = cetm(&["dayahead", "--strict-paper-matrix", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn longterm_and_limited_and_gen_run() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["longterm", "limited", "gen"] {
        let sub = dir.path().join(cmd);
        let o = cetm(&[cmd, "--out", &out_arg(&sub)]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(dir.path().join("gen/history.csv").exists());
    assert!(dir.path().join("longterm/ce_curve.csv").exists());
}
