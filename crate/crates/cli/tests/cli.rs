use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str =
    "source,detector,snr_db,n_t,n_r,m_order,trials,symbol_errors,antenna_errors,overall_errors,ser,aer,oer,ci95";

fn smed(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_smed"));
    cmd.args(args).env_remove("SMED_WORKERS").env_remove("RUST_LOG");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = smed(&args, &[]);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

const MINIMAL_SWEEP: &str = "\
[run]
seed = 42
snr_db = 0, 10, 20
[system]
n_t = 2
n_r = 2
order = 2
[sweep]
detectors = ed-ml, c-ml
trials = 1000
";

#[test]
fn sweep_writes_three_rows_per_detector() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "min.cfg", MINIMAL_SWEEP);
    let out = dir.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);
    let text = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    let recs = rows(&out.join("records.csv"));
    assert_eq!(recs.len(), 6);
    for det in ["ed-ml", "c-ml"] {
        assert_eq!(recs.iter().filter(|r| r[0] == "mc" && r[1] == det).count(), 3);
    }
    assert!(recs.iter().all(|r| r[6] == "1000"));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 42"));
    assert!(manifest.contains("records.csv:6 = "));
}

#[test]
fn same_seed_gives_identical_bytes_at_any_worker_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "min.cfg", MINIMAL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run_ok("sweep", &cfg, &a, &["--workers", "1"]);
    run_ok("sweep", &cfg, &b, &["--workers", "1"]);
    let o = smed(
        &["sweep", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()],
        &[("SMED_WORKERS", "8")],
    );
    assert!(o.status.success());
    let first = fs::read(a.join("records.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("records.csv")).unwrap());
    assert_eq!(first, fs::read(c.join("records.csv")).unwrap());
    assert!(fs::read_to_string(c.join("manifest.txt")).unwrap().contains("workers = 8"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "min.cfg", MINIMAL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok("sweep", &cfg, &a, &[]);
    run_ok("sweep", &cfg, &b, &["--seed", "43"]);
    assert_ne!(fs::read(a.join("records.csv")).unwrap(), fs::read(b.join("records.csv")).unwrap());
    let manifest = fs::read_to_string(b.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 43") && manifest.contains("seed_source = --seed"));
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "min.cfg", MINIMAL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok("sweep", &cfg, &a, &["--seed", "7"]);
    let manifest = a.join("manifest.txt");
    run_ok("sweep", &manifest, &b, &[]);
    assert_eq!(fs::read(a.join("records.csv")).unwrap(), fs::read(b.join("records.csv")).unwrap());
}

#[test]
fn error_rate_falls_along_the_snr_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "fig4.cfg",
        "[run]\nseed = 5\nsnr_db = 0:5:25\n[system]\nn_t = 2\nn_r = 2\norder = 2\n[sweep]\ntrials = 20000\n",
    );
    let out = dir.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);
    let oer: Vec<f64> = column(&out.join("records.csv"), "oer").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(oer.len(), 6);
    assert!(oer.windows(2).all(|w| w[1] < w[0]), "{oer:?}");
}

#[test]
fn bad_config_exits_2_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "[run]\nsnr_db = 1, 2\n[system]\nn_t = 3\nn_r = 2\norder = 4\n[sweep]\ndetectors = ed-ml, psk\n",
    );
    let o = smed(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4:") && err.contains("power of two"), "{err}");
    assert!(err.contains("line 8:") && err.contains("psk"), "{err}");
}

#[test]
fn io_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.cfg");
    let o = smed(&["sweep", "--config", missing.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write_config(dir.path(), "min.cfg", MINIMAL_SWEEP);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = smed(&["sweep", "--config", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unconverged_series_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "short.cfg",
        "[run]\nsnr_db = 30\n[system]\nn_t = 2\nn_r = 2\norder = 4\n[analytic]\nmax_terms = 3\n",
    );
    let o = smed(&["analytic", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn analytic_truncation_table_against_paired_monte_carlo() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "t2.cfg",
        "[run]\nseed = 1\nsnr_db = 15, 21, 27\n[system]\nn_t = 2\nn_r = 2\norder = 4\n\
         [analytic]\ntruncations = 5, 10, 15, 20\nmc_trials = 20000\n",
    );
    let out = dir.path().join("out");
    run_ok("analytic", &cfg, &out, &[]);
    let recs = rows(&out.join("records.csv"));
    assert_eq!(recs.iter().filter(|r| r[0] == "analytic").count(), 3);
    assert_eq!(recs.iter().filter(|r| r[0] == "mc").count(), 3);
    let table = rows(&out.join("truncation.csv"));
    assert_eq!(table.len(), 12);
    assert!(table.iter().all(|r| r[3] == "mc"));
    for snr in table.chunks(4) {
        let rel: Vec<f64> = snr.iter().map(|r| r[5].parse().unwrap()).collect();
        assert!(rel.windows(2).all(|w| w[1] <= w[0]), "{rel:?}");
    }
}

#[test]
fn binary_constellation_has_a_single_threshold_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "m2.cfg",
        "[run]\nsnr_db = 10, 20\n[system]\nn_t = 1\nn_r = 1\norder = 2\n[analytic]\ntruncations = 5\n",
    );
    let out = dir.path().join("out");
    run_ok("analytic", &cfg, &out, &[]);
    let recs = rows(&out.join("records.csv"));
    assert_eq!(recs.len(), 2);
    for r in &recs {
        let ser: f64 = r[10].parse().unwrap();
        assert!(ser > 0.0 && ser < 0.5);
        // one antenna: no index errors, so the overall rate is the symbol rate
        assert_eq!(r[11], "0");
        assert_eq!(r[10], r[12]);
    }
    assert!(rows(&out.join("truncation.csv")).iter().all(|r| r[3] == "series"));
}

#[test]
fn diversity_report_slopes_track_receive_antennas() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "div.cfg",
        "[run]\nsnr_db = 20\n[system]\nn_t = 2\nn_r = 2\norder = 2\n\
         [analytic]\ndiversity_n_r = 2, 4\ndiversity_window_db = 25, 35\n",
    );
    let out = dir.path().join("out");
    run_ok("analytic", &cfg, &out, &[]);
    let slopes: Vec<f64> = column(&out.join("diversity.csv"), "ser_slope").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(slopes.len(), 2);
    assert!((slopes[0] - 2.0).abs() < 0.15, "{slopes:?}");
    assert!((slopes[1] - 4.0).abs() < 0.15, "{slopes:?}");
}

#[test]
fn noiseless_loopback_has_no_bit_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "clean.cfg",
        "[run]\nseed = 9\nsnr_db = inf\n[system]\nn_t = 1\nn_r = 2\norder = 4\n[frame]\nframes = 10\n",
    );
    let out = dir.path().join("out");
    run_ok("frame", &cfg, &out, &[]);
    let summary = rows(&out.join("frame_summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(column(&out.join("frame_summary.csv"), "bit_errors"), vec!["0"]);
    assert_eq!(column(&out.join("frame_summary.csv"), "erasures"), vec!["0"]);
}

#[test]
fn frame_run_aggregates_per_snr_with_detail_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "frames.cfg",
        "[run]\nseed = 2\nsnr_db = 10, 15, 20\n[system]\nn_t = 2\nn_r = 2\norder = 4\n\
         [frame]\nframes = 200\npayload_bits = 400\n",
    );
    let out = dir.path().join("out");
    run_ok("frame", &cfg, &out, &["--workers", "2"]);
    assert_eq!(rows(&out.join("frame_summary.csv")).len(), 3);
    assert_eq!(rows(&out.join("frames.csv")).len(), 600);
    let recs = rows(&out.join("records.csv"));
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r[0] == "frame" && r[1] == "ed-ml"));
    let oer: Vec<f64> = recs.iter().map(|r| r[12].parse().unwrap()).collect();
    assert!(oer.windows(2).all(|w| w[1] < w[0]), "{oer:?}");
}

#[test]
fn testbed_parameters_parse_and_run_with_capture() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "testbed.cfg",
        "[run]\nseed = 4\nsnr_db = 20\n[system]\nn_t = 2\nn_r = 2\norder = 4\n\
         [frame]\nframes = 3\npayload_bits = 4000\ntraining_len = 40\noversample = 12\niq_dump = true\n",
    );
    let out = dir.path().join("out");
    run_ok("frame", &cfg, &out, &[]);
    assert_eq!(column(&out.join("frame_summary.csv"), "bits"), vec!["12000"]);
    let hdr = fs::read_to_string(out.join("iq/point0.hdr")).unwrap();
    let samples: usize = hdr
        .lines()
        .find_map(|l| l.strip_prefix("samples = "))
        .unwrap()
        .parse()
        .unwrap();
    for k in 0..2 {
        assert_eq!(fs::metadata(out.join(format!("iq/point0_{k}.iq"))).unwrap().len() as usize, samples * 8);
    }
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("iq/point0_1.iq = "));
}
