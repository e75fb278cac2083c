//! End-to-end tests of the command-line binary: config handling, output
//! format, determinism, and diagnostics.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fadekey"))
}

fn write_cfg(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fadekey");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL_SWEEP: &str = "\
n_paths = 6
intercepted_count = 6
trials = 2000
calibration_samples = 20000
diameters_m = 0.1, 1, 10
seed = 5
";

#[test]
fn sweep_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(&dir, "sweep.cfg", SMALL_SWEEP);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let out_c = dir.path().join("c.csv");
    run_ok(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out_a).args(["--workers", "1"]));
    run_ok(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out_b).args(["--workers", "1"]));
    run_ok(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out_c).args(["--workers", "3"]));
    let a = std::fs::read(&out_a).unwrap();
    assert_eq!(a, std::fs::read(&out_b).unwrap(), "rerun differs");
    assert_eq!(a, std::fs::read(&out_c).unwrap(), "worker count changed output");
}

#[test]
fn sweep_csv_echo_roundtrips_and_overrides_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(&dir, "sweep.cfg", SMALL_SWEEP);
    let out = dir.path().join("out.csv");
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--set", "trials=1500", "--seed", "42"]),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let echoed = fadekey::config::parse_echo_from_csv(&text).unwrap();
    assert_eq!(echoed.experiment.trials, 1500);
    assert_eq!(echoed.experiment.seed, 42);
    assert_eq!(echoed.experiment.diameters_m, vec![0.1, 1.0, 10.0]);
    // header shape
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("diameter_m,cmi_bits,"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("diameter_m"))
        .collect();
    assert_eq!(rows.len(), 3);
}

#[test]
fn config_errors_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for (body, needle) in [
        ("n_path = 6\n", "n_path"),
        ("trials = banana\n", "trials"),
        ("n_paths = 4\nintercepted_count = 9\n", "intercepted_count"),
    ] {
        let cfg = write_cfg(&dir, "bad.cfg", body);
        let result = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(!result.status.success(), "accepted bad config {body:?}");
        let stderr = String::from_utf8_lossy(&result.stderr);
        assert!(
            stderr.contains(needle),
            "diagnostic for {body:?} missing `{needle}`: {stderr}"
        );
        assert!(stderr.lines().count() <= 1 || stderr.lines().next().unwrap().contains("error"));
    }
}

#[test]
fn pdf_subcommand_writes_curves_and_kl_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        &dir,
        "pdf.cfg",
        "pdf_n_paths_list = 6\npdf_missing_for_eve = 1\npdf_samples = 20000\nseed = 3\n",
    );
    let out = dir.path().join("pdf.csv");
    let res = run_ok(bin().args(["pdf", "--config"]).arg(&cfg).arg("--out").arg(&out));
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "bin_center,rayleigh,paths_6,intercept_5of6");
    assert!(text.contains("# kl_bits paths_6 = "));
    assert!(text.contains("# kl_bits intercept_5of6 = "));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("KL( paths_6 || rayleigh )"));
}

#[test]
fn acf_subcommand_reports_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        &dir,
        "acf.cfg",
        "n_paths = 6\nacf_realizations = 1000\nacf_max_lag_rad = 2\nseed = 3\n",
    );
    let out = dir.path().join("acf.csv");
    let res = run_ok(bin().args(["acf", "--config"]).arg(&cfg).arg("--out").arg(&out));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text
        .lines()
        .any(|l| l == "lag_rad,first_order,first_order_theory,squared_envelope,squared_envelope_theory"));
    assert!(text.contains("# rmse_first_order"));
    // 2 rad at 0.1 rad step: 21 lag rows
    let data_rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("lag_rad"))
        .count();
    assert_eq!(data_rows, 21);
    assert!(String::from_utf8_lossy(&res.stdout).contains("rmse_first_order"));
}

#[test]
fn calibrate_subcommand_prints_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        &dir,
        "cal.cfg",
        "calibration_samples = 50000\nseed = 9\n",
    );
    let res = run_ok(bin().args(["calibrate", "--config"]).arg(&cfg));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("median_m = "));
    assert!(stdout.contains("threshold_t = "));
    assert!(stdout.contains("entropy_s = "));
}

#[test]
fn validate_subcommand_passes_battery() {
    let res = run_ok(bin().args(["validate", "--seed", "6"]));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn missing_config_file_is_one_line_error() {
    let res = bin()
        .args(["sweep", "--config", "/nonexistent/nope.cfg", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert!(!res.status.success());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.starts_with("error: "), "{stderr}");
}

#[test]
fn shipped_presets_parse() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "paper_fig1.cfg",
        "paper_fig2_top.cfg",
        "paper_fig2_mid.cfg",
        "paper_fig2_bot.cfg",
        "ci_sweep.cfg",
    ] {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        let cfg = fadekey::config::parse_str(&text)
            .unwrap_or_else(|e| panic!("{name} does not parse: {e}"));
        match name {
            "paper_fig2_top.cfg" => {
                assert_eq!(cfg.experiment.n_paths, 6);
                assert_eq!(cfg.experiment.intercepted_count, 6);
                assert_eq!(cfg.experiment.trials, 1_000_000);
                assert_eq!(cfg.experiment.diameters_m.len(), 21);
            }
            "paper_fig2_mid.cfg" => {
                assert_eq!(cfg.experiment.n_paths, 20);
                assert_eq!(cfg.experiment.interference_paths, 20);
            }
            "paper_fig2_bot.cfg" => {
                assert_eq!(cfg.experiment.eve_snr_db, fadekey::fading::NoiseLevel::Noiseless);
                assert_eq!(cfg.experiment.pointing_sigma_rad, 0.0);
            }
            "ci_sweep.cfg" => assert_eq!(cfg.experiment.trials, 100_000),
            _ => {}
        }
    }
}
