use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sil-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sil")).args(args).output().unwrap()
}

fn run_config(dir: &Path, sub: &str, text: &str) -> Output {
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    sil(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn passing_run_writes_tables_and_report() {
    let dir = scratch("pass");
    let o = run_config(&dir, "profile", "potential = quartic\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("out/profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("z,theta0,dtheta0"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/profile.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], serde_json::Value::Bool(true));
    for key in ["d1", "d2", "d3", "d4", "d5", "d6", "beta", "residual"] {
        assert!(json["details"][key].is_number(), "{key}");
    }
}

#[test]
fn failed_check_exits_nonzero() {
    let dir = scratch("fail");
    // Too coarse for the 1e-10 moment identity.
    let o = run_config(&dir, "profile", "half_length = 6\npoints = 513\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL abs_d4_plus_half_d1"));
}

#[test]
fn bad_input_is_reported() {
    let dir = scratch("bad");
    let o = run_config(&dir, "profile", "experiment = converge\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not `profile`"));
    let o = sil(&["mcf", "--config", dir.join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_config(&dir, "report", "inputs = nowhere.csv\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mcf_table_schema() {
    let dir = scratch("mcf");
    let o = run_config(&dir, "mcf", "t_end = 0.002\nsamples = 2\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.join("out/mcf.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,gamma"));
}
