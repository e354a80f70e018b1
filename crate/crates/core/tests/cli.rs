//! End-to-end runs of the `gpkf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn gpkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpkf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn numbers(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn assert_close(got: &str, expected: &str, tol: f64) {
    let (a, b) = (numbers(got), numbers(expected));
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() <= tol * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

fn filter_stdout(config: &str, measurements: &str) -> Output {
    let (c, m) = (data(config), data(measurements));
    gpkf(&["filter", "--config", c.to_str().unwrap(), "--measurements", m.to_str().unwrap(), "--out", "-"])
}

#[test]
fn white_kernel_filter_matches_kalman_golden() {
    let out = filter_stdout("white.toml", "white_measurements.csv");
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let golden = std::fs::read_to_string(data("white_kf_estimates.csv")).unwrap();
    assert_close(&text(&out.stdout), &golden, 1e-12);
}

#[test]
fn unbounded_filter_matches_golden() {
    let out = filter_stdout("unbounded.toml", "unbounded_measurements.csv");
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let golden = std::fs::read_to_string(data("unbounded_estimates.csv")).unwrap();
    assert_close(&text(&out.stdout), &golden, 1e-12);
    assert!(text(&out.stderr).contains("effective_N=unbounded"));
}

#[test]
fn correlation_threshold_reports_window() {
    let out = filter_stdout("kmin.toml", "kmin_measurements.csv");
    assert_eq!(out.status.code(), Some(0));
    let summary = text(&out.stderr);
    assert!(summary.contains("window_policy=k_min"), "{summary}");
    assert!(summary.contains("effective_N=16"), "{summary}");
}

#[test]
fn simulate_reproduces_committed_measurements() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("run");
    let c = data("white.toml");
    let out = gpkf(&["simulate", "--config", c.to_str().unwrap(), "--out-prefix", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for suffix in ["states", "measurements", "noise"] {
        assert!(dir.path().join(format!("run_{suffix}.csv")).exists());
    }
    let fresh = std::fs::read_to_string(dir.path().join("run_measurements.csv")).unwrap();
    let committed = std::fs::read_to_string(data("white_measurements.csv")).unwrap();
    assert_eq!(fresh, committed);
}

fn compare_csv(variants: &str, seeds: &str) -> String {
    let c = data("scenario.toml");
    let out = gpkf(&["compare", "--config", c.to_str().unwrap(), "--variants", variants, "--seeds", seeds, "--out", "-"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    text(&out.stdout)
}

/// Drops the wall-time column, the only nondeterministic output.
fn without_timing(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(4);
            f.join(",")
        })
        .collect()
}

#[test]
fn compare_is_deterministic() {
    let a = compare_csv("kf,gp-2,gp-full", "3");
    let b = compare_csv("kf,gp-2,gp-full", "3");
    assert_eq!(without_timing(&a), without_timing(&b));
    // Header, 3 seeds x 3 variants, 3 aggregates.
    assert_eq!(a.lines().count(), 1 + 9 + 3);
}

#[test]
fn one_seed_one_variant_has_three_rows() {
    let csv = compare_csv("gp-5", "1");
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("all,gp-5,"));
}

#[test]
fn window_of_one_agrees_with_kalman() {
    let csv = compare_csv("kf,gp-1", "5");
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    for pair in rows.chunks(2) {
        let (kf, gp): (f64, f64) = (pair[0][2].parse().unwrap(), pair[1][2].parse().unwrap());
        // Equal up to the noise nugget.
        assert!((kf - gp).abs() <= 1e-5 * kf, "{kf} vs {gp}");
    }
}

#[test]
fn acf_starts_at_one() {
    let m = data("white_measurements.csv");
    let out = gpkf(&["acf", "--input", m.to_str().unwrap(), "--column", "z1", "--max-lag", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("# band=±"));
    let rows = numbers(&stdout);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0], vec![0.0, 1.0]);
    assert!(rows.iter().all(|r| r[1].abs() <= 1.0));
}

#[test]
fn fit_writes_reloadable_kernel() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("kernel.toml");
    let m = data("unbounded_measurements.csv");
    let out = gpkf(&["fit", "--input", m.to_str().unwrap(), "--family", "matern32", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).starts_with("family=matern32,variance="));
    let file = gpkf::io::read_kernel_file(&out_path).unwrap();
    let residuals = gpkf::io::read_residuals(&m).unwrap();
    let refit = gpkf::cli::refit_log_likelihood(&file, &residuals).unwrap();
    assert!((refit - file.fit.unwrap().log_likelihood).abs() <= 1e-9 * refit.abs().max(1.0));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "t,v\n0,0.1\n1,-0.2\n2,0.3\n3,0.0\n").unwrap();
    let out = gpkf(&["fit", "--input", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));

    let typo = dir.path().join("typo.toml");
    let config = std::fs::read_to_string(data("scenario.toml")).unwrap();
    std::fs::write(&typo, config.replace("lengthscale", "lenghtscale")).unwrap();
    let m = data("white_measurements.csv");
    let out = gpkf(&["filter", "--config", typo.to_str().unwrap(), "--measurements", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("kernel"), "{}", text(&out.stderr));

    let gap = dir.path().join("gap.csv");
    std::fs::write(&gap, "t,z\n1,0.1\n2,0.2\n4,0.3\n").unwrap();
    let c = data("white.toml");
    let out = gpkf(&["filter", "--config", c.to_str().unwrap(), "--measurements", gap.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = gpkf(&["filter", "--config", "/nonexistent.toml", "--measurements", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_flag_with_defaults() {
    let cases: [(&str, &[&str]); 5] = [
        ("simulate", &["--config", "--out-prefix"]),
        ("fit", &["--input", "--family", "--restarts", "--demean", "--out", "[default: exponential]", "[default: 5]", "[default: -]"]),
        ("acf", &["--input", "--column", "--max-lag", "[default: 1]", "[default: 40]"]),
        ("filter", &["--config", "--measurements", "--out", "[default: -]"]),
        ("compare", &["--config", "--variants", "--seeds", "--out", "[default: kf,gp-2,gp-5,gp-full]", "[default: 100]", "[default: -]"]),
    ];
    for (cmd, flags) in cases {
        let out = gpkf(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let help = text(&out.stdout);
        for flag in flags {
            assert!(help.contains(flag), "`{cmd} --help` lacks {flag}:\n{help}");
        }
    }
}
