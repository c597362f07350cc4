//! Exit codes and outputs of the command-line driver.

use std::fs::{self, File};
use std::path::PathBuf;
use std::process::Command;

use hsbg::hs_dynamics::read_trajectory;

fn hsbg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hsbg"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = "replicas = 4\nseed = 3\nsnapshots = 3\n[scaling]\nd = 2\nmu = 100.0\nhorizon = 0.05\n\
                      [profile]\nkind = \"bimodal\"\nbeta = 1.5\nshift = 1.0\n";

#[test]
fn hard_errors_exit_with_two() {
    assert_eq!(hsbg().args(["experiment", "nope"]).status().unwrap().code(), Some(2));
    assert_eq!(hsbg().arg("simulate").status().unwrap().code(), Some(2));
    let dir = scratch("bad_config");
    let path = dir.join("bad.toml");
    fs::write(&path, CONFIG.replace("mu = 100.0", "mu = 100.0\nepsilon = 0.01")).unwrap();
    let out = hsbg().arg("simulate").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn passing_study_exits_with_zero_and_writes_its_report() {
    let dir = scratch("cumulants");
    let status = hsbg().args(["experiment", "cumulants", "--effort", "0.1", "--out"]).arg(&dir).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(fs::read_to_string(dir.join("cumulants.csv")).unwrap().starts_with("name,observed"));
}

#[test]
fn simulate_writes_a_readable_trajectory() {
    let dir = scratch("simulate");
    let path = dir.join("run.toml");
    fs::write(&path, CONFIG).unwrap();
    let status = hsbg().arg("simulate").arg("--config").arg(&path).arg("--out").arg(&dir).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let traj = read_trajectory(File::open(dir.join("trajectory.bin")).unwrap()).unwrap();
    assert_eq!(traj.seed, 3);
    assert!((traj.horizon - 0.05).abs() < 1e-12);
    let table = fs::read_to_string(dir.join("conserved.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}
