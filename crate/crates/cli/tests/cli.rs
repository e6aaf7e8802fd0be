//! End-to-end checks of the binary: subcommands, flags, exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slipmhd"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("slipmhd_cli_tests").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_error_is_exit_2() {
    let out = bin().arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["bogus", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_carry_line_numbers_and_exit_2() {
    let dir = tmpdir("badcfg");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "grid.nx = 8\nnot.a.key = 1\n").unwrap();
    let out = bin().args(["simulate", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 2"), "stderr: {msg}");
}

#[test]
fn simulate_and_fit_roundtrip() {
    let dir = tmpdir("sim");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 8\ntime.dt = 0.001\ntime.T = 0.01\n\
         init.kind = shear\ninit.amplitude = 1\noutput.record_interval = 0.005\n",
    )
    .unwrap();
    let outdir = dir.join("out");
    let out = bin()
        .args(["simulate", cfg.to_str().unwrap(), "--out", outdir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(outdir.join("diagnostics.csv").exists());
    assert!(outdir.join("final.snap").exists());

    // a two-column CSV for the fitter
    let csv = dir.join("points.csv");
    std::fs::write(&csv, "x,y\n1,2\n2,8\n4,32\n8,128\n").unwrap();
    let out = bin().args(["fit", csv.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let msg = String::from_utf8_lossy(&out.stdout);
    assert!(msg.contains("slope = 2"), "stdout: {msg}");
}

#[test]
fn blow_up_guard_is_exit_4() {
    let dir = tmpdir("guard");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 8\ntime.dt = 0.001\ntime.T = 0.01\n\
         init.kind = random\ninit.amplitude = 0.2\nguard.threshold = 0.000001\n\
         output.record_interval = 0.005\n",
    )
    .unwrap();
    let out = bin()
        .args(["simulate", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cfl_violation_is_exit_3() {
    let dir = tmpdir("cfl");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 8\ntime.dt = 0.25\ntime.T = 0.5\n\
         init.kind = shear\ninit.amplitude = 1\n",
    )
    .unwrap();
    let out = bin()
        .args(["simulate", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn converge_is_deterministic_across_jobs() {
    let dir = tmpdir("determinism");
    let cfg = dir.join("study.cfg");
    std::fs::write(
        &cfg,
        "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 8\ntime.dt = 0.001\ntime.T = 0.01\n\
         init.kind = random\ninit.amplitude = 0.2\noutput.record_interval = 0.005\n\
         sweep.nu_high = 0.01\nsweep.nu_low = 0.001\nsweep.count = 4\n",
    )
    .unwrap();
    let (d1, d2) = (dir.join("j1"), dir.join("j2"));
    for (outdir, jobs) in [(&d1, "1"), (&d2, "2")] {
        let out = bin()
            .args([
                "converge",
                cfg.to_str().unwrap(),
                "--out",
                outdir.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(d1.join("rates.csv")).unwrap();
    let b = std::fs::read(d2.join("rates.csv")).unwrap();
    assert_eq!(a, b, "rates.csv differs between --jobs 1 and --jobs 2");
}

#[test]
fn verify_spaces_runs_clean() {
    let dir = tmpdir("verify");
    let cfg = dir.join("v.cfg");
    std::fs::write(&cfg, "grid.nx = 8\ngrid.ny = 8\ngrid.nz = 8\nverify.samples = 10\n").unwrap();
    let out = bin()
        .args(["verify-spaces", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("o").join("verify.csv").exists());
}
