use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn airslice(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airslice"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("AIRSLICE_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"replicatons": 3}"#);
    let out = airslice(dir.path(), &["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatons"));
}

#[test]
fn experiment_needs_a_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = airslice(dir.path(), &["experiment"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn params_inverts_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "t.csv", "tau,p\n0.01,0.2\n0.002,0.5\n");
    let out = airslice(dir.path(), &["params", &table, "--refined"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("params.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let err: f64 = r[col("relative_error")].parse().unwrap();
        assert!(err < 0.02, "{r:?}");
        assert_eq!(&r[col("seed")], "1");
    }
}

#[test]
fn params_rejects_extra_columns() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "t.csv", "tau,rate\n0.01,54\n");
    let out = airslice(dir.path(), &["params", &table]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_and_env_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write(a.path(), "c.json", r#"{"simulate": {"slots": 50000}}"#);
    assert!(airslice(a.path(), &["simulate", "--config", &cfg, "--seed", "42"]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_airslice"))
        .args(["simulate", "--config", &cfg, "--out"])
        .arg(b.path())
        .env("AIRSLICE_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv_a = fs::read(a.path().join("simulate.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("simulate.csv")).unwrap());
    assert!(String::from_utf8_lossy(&csv_a).lines().nth(1).unwrap().ends_with(",42"));
}

#[test]
fn optimize_is_reproducible_and_stamped() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = airslice(dir.path(), &["optimize", "--seed", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["optimize_links.csv", "optimize_isps.csv", "optimize_trace.csv"] {
        let bytes = fs::read(a.path().join(name)).unwrap();
        assert_eq!(bytes, fs::read(b.path().join(name)).unwrap(), "{name}");
        let header = String::from_utf8_lossy(&bytes).lines().next().unwrap_or_default().to_string();
        assert!(header.ends_with("config_hash,seed"), "{name}: {header}");
    }
}

#[test]
fn experiment_writes_summary_and_replications() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"sweep": {"lambdas": [1.0, 2.0]}}"#);
    let out = airslice(
        dir.path(),
        &["experiment", "--experiment", "throughput-vs-density-homogeneous", "--config", &cfg, "--replications", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("throughput-vs-density-homogeneous.csv")).unwrap();
    let reps = fs::read_to_string(dir.path().join("throughput-vs-density-homogeneous_replications.csv")).unwrap();
    assert!(summary.lines().next().unwrap().starts_with("density,lambda_mean,rho,scheme"));
    assert!(summary.lines().count() > 1);
    assert!(reps.lines().skip(1).any(|l| l.contains(",max-snr,")));
}
