use std::fs;
use std::process::Command;

fn tpc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tpc"))
}

#[test]
fn zero_cycles_is_a_usage_error() {
    let out = tpc().args(["simulate", "--cycles", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_column_is_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "cycle_id,port,arrival_class,t_ns,phase_rad,prep_sign\n1,D,erased,1262.0,0.1,minus\n").unwrap();
    let out = tpc().arg("analyze").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("readout_click"), "{err}");
}

#[test]
fn missing_records_file_is_io_error() {
    let out = tpc().args(["analyze", "/nonexistent/records.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_flags_bad_section() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[interferometer]\nsplit_ratio = 1.5\n").unwrap();
    let out = tpc().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[interferometer] FAIL"), "{text}");
    assert!(text.contains("[emitter] pass"), "{text}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, "[detection]\nzpl_eficiency = 0.1\n").unwrap();
    let out = tpc().args(["rates", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zpl_eficiency"));
}

#[test]
fn rates_prints_table() {
    let out = tpc().arg("rates").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("n,rate_hz"));
    assert!(text.lines().any(|l| l.starts_with("3,")));
}

#[test]
fn simulate_then_analyze_with_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[detection]\nzpl_efficiency = 0.05\n").unwrap();
    let rec = dir.path().join("r.csv");
    let out = tpc()
        .args(["simulate", "--cycles", "20000", "--seed", "9", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&rec)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("heralds = "));
    let tables = dir.path().join("tables");
    let report = dir.path().join("report.txt");
    let out = tpc()
        .arg("analyze")
        .arg(&rec)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&report)
        .arg("--tables")
        .arg(&tables)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&report).unwrap().contains("c_xx_corrected = "));
    assert!(tables.join("diagonals.csv").exists());
    assert!(tables.join("fringes.csv").exists());
}
