use std::fs;
use std::process::{Command, Output};

use magpic::sim::{CaseConfig, KEYS};

fn magpic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magpic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn poisson_test_passes() {
    let o = magpic(&["poisson-test", "--set", "grid.nx=32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("param,error,slope"));
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() == 2);
}

#[test]
fn single_particle_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = magpic(&[
        "single-particle",
        "--set",
        "run.scheme=SI3",
        "--set",
        "run.eps=1e-4",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 101);
    let meta = fs::read_to_string(out.join("run.meta")).unwrap();
    let cfg = CaseConfig::from_text(&meta).unwrap();
    assert_eq!(cfg.eps, 1e-4);
    assert_eq!(cfg.out_dir, out);
}

#[test]
fn invalid_value_exits_2_naming_the_key() {
    let o = magpic(&["single-particle", "--set", "run.dt=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.dt"));
}

#[test]
fn unknown_key_and_flag_are_rejected() {
    let o = magpic(&["diocotron", "--set", "run.nope=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.nope"));
    let o = magpic(&["diocotron", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn set_beats_file_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.cfg");
    fs::write(&file, "[run]\neps = 0.5\ndt = 0.05\n[grid]\nnx = 16\n").unwrap();
    let out = dir.path().join("o");
    let o = magpic(&[
        "single-particle",
        "--config",
        file.to_str().unwrap(),
        "--set",
        "run.eps=0.25",
        "--set",
        "run.t_final=0.2",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cfg = CaseConfig::from_text(&fs::read_to_string(out.join("run.meta")).unwrap()).unwrap();
    assert_eq!(
        (cfg.eps, cfg.dt, cfg.nx, cfg.t_final),
        (0.25, 0.05, 16, 0.2)
    );
}

#[test]
fn config_case_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.cfg");
    fs::write(&file, "[run]\ncase = dshape\n").unwrap();
    let o = magpic(&["diocotron", "--config", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.case"));
}

#[test]
fn help_lists_every_key_with_default() {
    let o = magpic(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for k in KEYS {
        let line = text
            .lines()
            .find(|l| l.trim_start().starts_with(&k.path()))
            .unwrap_or_else(|| panic!("{} missing", k.path()));
        assert!(line.contains(k.defaults[0]), "{line}");
    }
}

#[test]
fn study_exit_codes() {
    let ok = magpic(&["eps-consistency", "--order", "2", "--quiet"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    // the third-order semi-implicit scheme is only second order here
    let fail = magpic(&["convergence", "--scheme", "SI3", "--quiet"]);
    assert_eq!(fail.status.code(), Some(1));
    let bad = magpic(&["convergence", "--dts", "0.1,0.05"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn study_tables_written_under_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = magpic(&[
        "convergence",
        "--scheme",
        "SI2",
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("param,error,slope\n"));
    assert!(csv.trim_end().lines().last().unwrap().starts_with("PASS"));
}

#[test]
fn threads_flag_gives_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for (name, threads) in [("a", "2"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = magpic(&[
            "diocotron",
            "--set",
            "run.n_particles=6000",
            "--set",
            "run.t_final=0.3",
            "--set",
            "grid.nx=24",
            "--set",
            "grid.ny=24",
            "--seed",
            "9",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        csv.push(fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}
