use std::path::Path;
use std::process::{Command, Output};

fn qarray(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qarray"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QARRAY_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header names and numeric rows, skipping the comment line.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# qarray "));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn boundstate_at_zero_squeezing() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["boundstate", "--preset", "fig2", "--set", "r=0"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = dir.path().join("boundstate_summary.csv");
    let xi = column(&summary, "xi");
    let g_e = column(&summary, "G_e");
    assert_eq!(xi.len(), 1);
    assert!((xi[0] - 1.0369).abs() < 1e-4, "{}", xi[0]);
    assert!((g_e[0] - 0.9466).abs() < 1e-4, "{}", g_e[0]);
    let err = column(&summary, "delta_error");
    assert!(err[0].abs() < 1e-9);
    let (header, rows) = read_csv(&dir.path().join("boundstate.csv"));
    assert_eq!(header, ["r", "offset", "c_n"]);
    assert!(rows.iter().any(|r| r[1] == "0"));
}

#[test]
fn boundstate_sweep_rows_grow() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["boundstate", "--preset", "fig2", "--set", "r=0,0.5,1,1.5,2"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let xi = column(&dir.path().join("boundstate_summary.csv"), "xi");
    assert_eq!(xi.len(), 5);
    assert!(xi.windows(2).all(|w| w[1] > w[0]), "{xi:?}");
}

#[test]
fn unstable_drive_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["boundstate", "--preset", "fig2", "--set", "eta=500"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unstable drive"));
}

#[test]
fn coupling_table_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["coupling", "--preset", "fig3c"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("coupling.csv");
    let (r, g, c) = (column(&path, "r"), column(&path, "abs_G_lj"), column(&path, "C"));
    assert_eq!(r.len(), 151);
    assert!((g[0] - 1.38e-4).abs() / 1.38e-4 < 0.02);
    assert!((c[0] - 0.02).abs() / 0.02 < 0.15);
    let k = c.windows(2).position(|w| w[0] < 1.0 && w[1] >= 1.0).unwrap();
    assert!(r[k] <= 0.723 && 0.723 <= r[k + 1], "{} {}", r[k], r[k + 1]);
    assert!(stderr(&o).contains("C crosses 1 between r = 0.72 and r = 0.73"));
}

#[test]
fn separation_sweep_is_log_linear() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["coupling", "--preset", "fig3a"], dir.path());
    assert_eq!(code(&o), 0);
    let path = dir.path().join("coupling.csv");
    let (g, xi) = (column(&path, "abs_G_lj"), column(&path, "xi_prime"));
    assert_eq!(g.len(), 20);
    for w in g.windows(2) {
        assert!(((w[1] / w[0]).ln() + 1.0 / xi[0]).abs() < 1e-12);
    }
    let signs = column(&path, "G_lj");
    assert!(signs.iter().enumerate().all(|(k, s)| (*s < 0.0) == (k % 2 == 0)));
}

#[test]
fn weak_and_strong_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let weak = qarray(&["evolve", "--preset", "fig4-weak"], dir.path());
    assert_eq!(code(&weak), 0, "{}", stderr(&weak));
    let f = column(&dir.path().join("trajectory_effective.csv"), "fidelity_S");
    assert!(f.iter().copied().fold(0.0, f64::max) < 0.65);

    let strong = qarray(&["evolve", "--preset", "fig4-strong"], dir.path());
    assert_eq!(code(&strong), 0);
    let path = dir.path().join("evolve_summary.csv");
    assert!(column(&path, "max_fidelity_S")[0] > 0.85);
    assert!(column(&path, "max_P_eB")[0] > 0.8);
    let (header, _) = read_csv(&dir.path().join("trajectory_effective.csv"));
    assert_eq!(header, ["t", "P_eA", "P_eB", "fidelity_S", "trace"]);
}

#[test]
fn lossless_run_is_entangled_at_t_ent() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["evolve", "--preset", "fig4-strong", "--set", "gamma=0"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = column(&dir.path().join("evolve_summary.csv"), "fidelity_S_at_t_ent");
    assert!((f[0] - 1.0).abs() < 1e-6, "{}", f[0]);
}

#[test]
fn lattice_engine_writes_photon_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["evolve", "--preset", "fig4-strong", "--set", "engine=both", "--set", "r=1.2", "--set", "t_max_ent=1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("trajectory_lattice.csv"));
    assert_eq!(header, ["t", "P_eA", "P_eB", "fidelity_S", "trace", "photon_pop", "vacuum_pop", "photon_leak"]);
    assert_eq!(rows.len(), 601);
    let engines: Vec<String> = read_csv(&dir.path().join("evolve_summary.csv")).1.into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(engines, ["effective", "lattice"]);
    let closure = column(&dir.path().join("evolve_summary.csv"), "error_estimate");
    assert!(closure[1] < 1e-9);
}

#[test]
fn zero_drive_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["validate", "--preset", "fockcheck", "--set", "r=0", "--set", "n_max=4"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("deviation.csv");
    let (header, _) = read_csv(&path);
    assert_eq!(&header[..6], ["r", "ratio1", "ratio2", "n_sites", "n_max", "max_dev"]);
    assert!(column(&path, "max_dev")[0] < 1e-6);
}

#[test]
fn in_regime_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["validate", "--preset", "fockcheck"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(column(&dir.path().join("deviation.csv"), "max_dev")[0] < 0.05);
}

#[test]
fn regime_violation_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["validate", "--preset", "fockcheck", "--set", "J=10.7"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("regime check failed"));
    assert!(!dir.path().join("deviation.csv").exists());
    let forced = qarray(&["validate", "--preset", "fockcheck", "--set", "J=10.7", "--force"], dir.path());
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));
    let path = dir.path().join("deviation.csv");
    assert!(column(&path, "max_dev")[0] > 0.2);
}

#[test]
fn deviation_limit_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = qarray(&["validate", "--preset", "fockcheck", "--set", "max_dev_limit=1e-4"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("validation failed"));
    assert!(dir.path().join("deviation.csv").exists());
}

#[test]
fn output_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert_eq!(code(&qarray(&["coupling", "--preset", "fig3c"], dir.path())), 0);
        assert_eq!(code(&qarray(&["evolve", "--preset", "fig4-strong"], dir.path())), 0);
    }
    for name in ["coupling.csv", "trajectory_effective.csv", "evolve_summary.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |threads: &str, out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_qarray"))
            .args(["coupling", "--preset", "fig3c", "--out"])
            .arg(out)
            .env("QARRAY_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1", a.path())), 0);
    assert_eq!(code(&run("4", b.path())), 0);
    assert_eq!(std::fs::read(a.path().join("coupling.csv")).unwrap(), std::fs::read(b.path().join("coupling.csv")).unwrap());
    assert_eq!(code(&run("zero", a.path())), 1);
}

#[test]
fn config_file_and_override_layers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# two distant atoms\nr = 0.5\nDelta = 10\nJ = 10\nd = 6\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = qarray(&["coupling", "--config", cfg, "--set", "r=0"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("coupling.csv");
    assert!((column(&path, "abs_G_lj")[0] - 1.3889e-4).abs() < 1e-7);
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(first.lines().next().unwrap().starts_with("# qarray coupling preset=none r=0 delta_a=1000 Delta=10 J=10"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["coupling"],
        &["coupling", "--preset", "fig9"],
        &["coupling", "--preset", "fig3c", "--set", "colour=blue"],
        &["coupling", "--preset", "fig3c", "--set", "r=0", "--set", "eta=1"],
        &["coupling", "--preset", "fig3c", "--set", "r=abc"],
        &["coupling", "--preset", "fig3c", "--force"],
        &["evolve", "--preset", "fig3c"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&qarray(args, dir.path())), 1, "{args:?}");
    }
    let o = qarray(&["coupling", "--config", "/nonexistent/run.cfg"], dir.path());
    assert_eq!(code(&o), 1);
}
