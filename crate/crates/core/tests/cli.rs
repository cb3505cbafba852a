use std::path::Path;
use std::process::Command;

fn fracpm(args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_fracpm"))
        .args(args)
        .env("RUST_LOG", "off")
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn simulate_writes_time_series_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("heat");
    let conf = configs().join("heat.conf");
    let code = fracpm(&["simulate", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let ts = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = ts.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,mass,min_rho,max_rho,l2,"));
    assert!(header.ends_with("B1,B2,int_B1,int_B2sq,energy_residual_L2,energy_residual_Hs"));
    let rows: Vec<&str> = lines.collect();
    // t = 0, every 10 of 100 steps
    assert_eq!(rows.len(), 11);
    let cols = header.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
    let last_t: f64 = rows.last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((last_t - 0.1).abs() < 1e-15);

    let first = std::fs::read_to_string(out.join("snapshot_000000.txt")).unwrap();
    let mut words = first.split_whitespace();
    assert_eq!(words.next(), Some("1"));
    assert_eq!(words.next(), Some("64"));
    assert_eq!(words.next().map(|t| t.parse::<f64>().unwrap()), Some(0.0));
    assert_eq!(words.count(), 64);
    assert!(out.join("snapshot_000010.txt").exists());

    let resolved = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(resolved.contains("nu = 1\n"));
}

#[test]
fn overrides_follow_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let conf = configs().join("heat.conf");
    let code = fracpm(&[
        "simulate",
        "--config",
        conf.to_str().unwrap(),
        "--t-end",
        "0.02",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let resolved = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(resolved.contains("t_end = 0.02\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    assert_eq!(fracpm(&["simulate", "--out", &out("ok"), "--t-end", "0.01"]), 0);
    assert_eq!(fracpm(&["simulate", "--out", &out("bad"), "--no-such-key", "1"]), 1);
    assert_eq!(fracpm(&["simulate", "--config", &out("missing.conf")]), 1);
    assert_eq!(fracpm(&["simulate", "--out", &out("neg"), "--modes", "7"]), 1);
    assert_eq!(fracpm(&["simulate", "--out", &out("blow"), "--c-k", "1", "--t-end", "5"]), 2);
    assert_eq!(fracpm(&["simulate", "--out", &out("steps"), "--max-steps", "5"]), 4);
}

#[test]
fn campaigns_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let code = fracpm(&[
        "picard",
        "--out",
        out.to_str().unwrap(),
        "--t-end",
        "0.05",
        "--mu",
        "0.25",
        "--dt-policy",
        "fixed",
        "--picard-iterations",
        "4",
    ]);
    assert_eq!(code, 0);
    let table = std::fs::read_to_string(out.join("picard.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("n,difference,ratio"));
    assert_eq!(table.lines().count(), 5);

    let out = dir.path().join("v");
    let code = fracpm(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "--verify-select",
        "lemma1,antisymmetry",
        "--verify-samples",
        "2000",
    ]);
    assert_eq!(code, 0);
    let report = std::fs::read_to_string(out.join("verify_report.txt")).unwrap();
    assert!(report.contains("[lemma1 s=3 d=1]"));
    assert!(report.contains("pass = true"));
}
