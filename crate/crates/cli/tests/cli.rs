use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn phaselab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phaselab"))
        .current_dir(dir)
        .env_remove("PHASELAB_OUT")
        .env_remove("PHASELAB_DATA")
        .args(args)
        .output()
        .expect("spawn phaselab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_schema() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["simulate", "--l", "10", "--d", "100", "--k", "2", "--lambda", "0.01", "--t-max", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("simulate:"));
    let csv = fs::read_to_string(tmp.path().join("out/simulate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,f,u,q_self_weak,q_self_strong,q_cross_weak,q_cross_strong,r1,rk,r0_weak,r0_strong,total_paper_gj,total_exact_gj,total_exact_opt"
    );
    assert_eq!(lines.count(), 21);
    assert!(!tmp.path().join("out/simulate.svg").exists());
}

#[test]
fn svg_format_and_plot() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["--format", "both", "simulate", "--l", "10", "--d", "100", "--t-max", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = fs::read_to_string(tmp.path().join("out/simulate.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let o = phaselab(tmp.path(), &["plot", "--input", "out/simulate.csv", "--columns", "f,u", "--output", "p.svg"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(tmp.path().join("p.svg")).unwrap().contains("<path "));
    let o = phaselab(tmp.path(), &["plot", "--input", "out/simulate.csv", "--columns", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_check_passes() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(
        tmp.path(),
        &["oracle-check", "--l", "5", "--d", "20", "--n", "50", "--k", "2", "--lambda", "0.05", "--steps", "200"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    assert!(tmp.path().join("out/oracle.csv").exists());
}

#[test]
fn oracle_tolerance_failure_exits_two() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(
        tmp.path(),
        &["oracle-check", "--l", "5", "--d", "20", "--n", "50", "--lambda", "0.05", "--steps", "20", "--tol=-1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn certify_rows_and_exit_code() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["certify", "--suite", "saturation"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/certificates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let o = phaselab(tmp.path(), &["certify", "--suite", "all"]);
    let csv = fs::read_to_string(tmp.path().join("out/certificates.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    let any_fail = rows.iter().any(|r| r.contains(",false,"));
    assert_eq!(o.status.code(), Some(if any_fail { 2 } else { 0 }));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(phaselab(tmp.path(), &[]).status.code(), Some(1));
    assert_eq!(phaselab(tmp.path(), &["simulate", "--l", "1"]).status.code(), Some(1));
    assert_eq!(phaselab(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_data_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["empirical", "--data-root", "nowhere", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.cfg"),
        "# small run\ncommand = simulate\nl = 10\nd = 100\nt_max = 5\nsteps = 3\nout = from_file\n",
    )
    .unwrap();
    let o = phaselab(tmp.path(), &["--config", "run.cfg", "--t-max", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
    let csv = fs::read_to_string(tmp.path().join("from_file/simulate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);

    let o = Command::new(env!("CARGO_BIN_EXE_phaselab"))
        .current_dir(tmp.path())
        .env("PHASELAB_OUT", "from_env")
        .args(["--config", "run.cfg"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("from_env/simulate.csv").exists());

    let o = phaselab(tmp.path(), &["--config", "run.cfg", "--out", "from_flag"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("from_flag/simulate.csv").exists());

    fs::write(tmp.path().join("bad.cfg"), "no equals sign\n").unwrap();
    assert_eq!(phaselab(tmp.path(), &["--config", "bad.cfg", "simulate"]).status.code(), Some(1));
}

#[test]
fn concentration_writes_tables() {
    let tmp = TempDir::new().unwrap();
    let o = phaselab(tmp.path(), &["concentration", "--l", "10", "--d", "100", "--trials", "10000"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    let tails = fs::read_to_string(tmp.path().join("out/tail_bounds.csv")).unwrap();
    assert!(tails.starts_with("a,sigma,exact"));
    assert!(tmp.path().join("out/concentration.csv").exists());
}
