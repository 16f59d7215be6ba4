//! End-to-end CLI behavior: exit codes, emitted files, reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ghbf")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

const SMALL_IDEAL: &str = "\
grid_n = 16
seed = 5
reynolds = inf
buoyancy_a0 = 0.4
omega_z = 0.3
pv_convention = rotating
init_kmax = 1
theta_kmax = 1
passive_kmax = 1
";

#[test]
fn verify_small_ideal_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ideal.conf", SMALL_IDEAL);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--suite",
        "ideal",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("q1A") && stdout.contains("pass"));
    let csv = std::fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    assert!(csv.starts_with("identity,l2_rel,linf,masked_fraction,tolerance,status"));
    assert_eq!(csv.lines().count(), 1 + 5);
    // Config copy written for reproducibility.
    assert_eq!(
        std::fs::read_to_string(out_dir.join("config.conf")).unwrap(),
        SMALL_IDEAL
    );
}

#[test]
fn verify_zero_tolerance_fails_with_full_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ideal.conf", SMALL_IDEAL);
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--suite",
        "ideal",
        "--tolerance",
        "0",
    ]);
    assert_eq!(exit_code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"));
    assert!(stdout.contains("q1B"), "table still emitted");
}

#[test]
fn verify_unknown_suite_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ideal.conf", SMALL_IDEAL);
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "bogus"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.conf",
        &format!("{SMALL_IDEAL}defenitely_a_typo = 1\n"),
    );
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "ideal"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("defenitely_a_typo"));
}

#[test]
fn nonpositive_density_is_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "comp.conf",
        "grid_n = 16\nrho_base = 0.5\nrho_amplitude = 0.9\n",
    );
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--suite",
        "compressible-q1",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive"));
}

const SMALL_RUN: &str = "\
grid_n = 16
seed = 9
model = boussinesq
reynolds = 50
prandtl = 1
buoyancy_a0 = 0.3
dt_policy = fixed
dt = 0.05
steps = 8
snapshot_stride = 4
init_kmax = 2
theta_kmax = 2
";

#[test]
fn simulate_writes_artifacts_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.conf", SMALL_RUN);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(out_a.join("series.csv")).unwrap();
    let b = std::fs::read(out_b.join("series.csv")).unwrap();
    assert_eq!(a, b, "series must be byte-identical");
    // header + 9 rows (initial + 8 steps)
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 10);
    for name in ["snap_000000.ghbf", "snap_000001.ghbf"] {
        let sa = std::fs::read(out_a.join(name)).unwrap();
        let sb = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(sa, sb, "{name} must be byte-identical");
    }
}

#[test]
fn simulate_zero_state_yields_zero_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.conf",
        "grid_n = 16\nmodel = euler\nreynolds = inf\ndt_policy = fixed\ndt = 0.1\nsteps = 5\n\
         init_velocity = zero\ninit_theta = zero\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        // energy, int_theta, int_q, max_vorticity all exactly zero.
        for col in &cols[1..5] {
            assert_eq!(col.parse::<f64>().unwrap(), 0.0, "line {line}");
        }
    }
}

#[test]
fn diagnose_roundtrip_and_corruption_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.conf", SMALL_RUN);
    let run_dir = tmp.path().join("run");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let snap = run_dir.join("snap_000000.ghbf");

    let diag_dir = tmp.path().join("diag");
    let out = run(&[
        "diagnose",
        "--snapshot",
        snap.to_str().unwrap(),
        "--out",
        diag_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let derived = bfield::snapshot::Snapshot::read_path(&diag_dir.join("derived.ghbf")).unwrap();
    assert!(derived.field("omega").is_some());
    assert!(derived.field("q").is_some());
    assert!(derived.field("b").is_some());

    // Truncated file: distinct error with a byte offset.
    let bytes = std::fs::read(&snap).unwrap();
    let truncated = tmp.path().join("truncated.ghbf");
    std::fs::write(&truncated, &bytes[..bytes.len() - 64]).unwrap();
    let out = run(&[
        "diagnose",
        "--snapshot",
        truncated.to_str().unwrap(),
        "--out",
        diag_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));

    // Magic corruption: a different, named failure.
    let mut corrupt = bytes.clone();
    corrupt[0] = b'Z';
    let bad_magic = tmp.path().join("bad_magic.ghbf");
    std::fs::write(&bad_magic, &corrupt).unwrap();
    let out = run(&[
        "diagnose",
        "--snapshot",
        bad_magic.to_str().unwrap(),
        "--out",
        diag_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn surface_flux_masked_seed_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    // A seed margin of 2 demands |q| >= 2 max|q| on the patch, which no
    // placement satisfies: seeding must fail with the invalidation code.
    let cfg = write_config(
        tmp.path(),
        "flux.conf",
        "grid_n = 16\nseed = 3\nmodel = boussinesq\nreynolds = 100\nbuoyancy_a0 = 0.3\n\
         dt_policy = fixed\ndt = 0.02\nsteps = 4\nsurface_stride = 2\nsurface_m = 8\n\
         init_kmax = 2\ntheta_kmax = 2\nsurface_seed_margin = 2.0\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "surface-flux",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    // The CSV is still flushed (header at minimum).
    let csv = std::fs::read_to_string(out_dir.join("surface_flux.csv")).unwrap();
    assert!(csv.starts_with("t,B_flux,Dq_flux,dBflux_dt,rel_mismatch"));
}

#[test]
fn surface_flux_small_window_runs_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "flux.conf",
        "grid_n = 16\nseed = 3\nmodel = boussinesq\nreynolds = 100\nbuoyancy_a0 = 0.3\n\
         dt_policy = fixed\ndt = 0.02\nsteps = 8\nsurface_stride = 2\nsurface_m = 12\n\
         init_kmax = 1\ntheta_kmax = 1\nsurface_extent = 0.7\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "surface-flux",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("surface_flux.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5, "initial sample plus 4 windows");
    // Interior rows carry the centered-difference columns.
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    assert!(!row[3].is_empty() && !row[4].is_empty());
}
