//! End-to-end tests driving the `twinsep` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twinsep(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twinsep"));
    cmd.args(args).current_dir(dir);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn census_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["census", "--limit", "1e6", "--out", "data"], &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("1000000,78498,8168,8167,101"), "stdout: {text}");

    let data = dir.path().join("data");
    for name in [
        "histogram_100000.csv",
        "histogram_1000000.csv",
        "record_gaps.csv",
        "summary.csv",
        "census.checkpoint",
    ] {
        assert!(data.join(name).exists(), "missing {name}");
    }
    let summary = fs::read_to_string(data.join("summary.csv")).unwrap();
    assert!(summary.starts_with("n,pi1,pi2,gaps,"));
    assert!(summary.contains("1000000,78498,8168,8167"));
}

#[test]
fn census_rejects_small_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["census", "--limit", "50"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("at least 100"));
}

#[test]
fn census_accepts_extra_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(
        dir.path(),
        &["census", "--limit", "2e5", "--checkpoints", "5e4,1.5e5", "--out", "d"],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for bound in ["50000", "100000", "150000", "200000"] {
        assert!(
            dir.path().join("d").join(format!("histogram_{bound}.csv")).exists(),
            "missing snapshot at {bound}"
        );
    }
}

#[test]
fn interrupted_census_resumes_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let base = &[
        "census",
        "--limit",
        "3e5",
        "--segment-size",
        "65536",
        "--export-separations",
    ];

    let full: Vec<&str> = [&base[..], &["--out", "full"]].concat();
    let out = twinsep(dir.path(), &full, &[]);
    assert!(out.status.success());

    let split: Vec<&str> = [&base[..], &["--out", "split"]].concat();
    let out = twinsep(dir.path(), &split, &[("TWINSEP_CENSUS_STOP_AFTER", "2")]);
    assert_eq!(out.status.code(), Some(3), "expected pause: {}", stderr(&out));
    assert!(stdout(&out).contains("census paused"));

    let resume: Vec<&str> = [&base[..], &["--out", "split", "--resume"]].concat();
    let out = twinsep(dir.path(), &resume, &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    for name in [
        "histogram_100000.csv",
        "histogram_300000.csv",
        "record_gaps.csv",
        "summary.csv",
        "separations.csv",
    ] {
        let a = fs::read(dir.path().join("full").join(name)).unwrap();
        let b = fs::read(dir.path().join("split").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs after resume");
    }
}

#[test]
fn census_rerun_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out_dir in ["a", "b"] {
        let out = twinsep(
            dir.path(),
            &["census", "--limit", "1.2e5", "--out", out_dir],
            &[],
        );
        assert!(out.status.success());
    }
    for name in ["histogram_100000.csv", "histogram_120000.csv", "record_gaps.csv", "summary.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between reruns");
    }
}

#[test]
fn fit_reports_decay_and_m0() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["census", "--limit", "1e6", "--out", "d"], &[]);
    assert!(out.status.success());
    let out = twinsep(dir.path(), &["fit", "--out", "d"], &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("m0 = "), "stdout: {text}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d/fit_report.json")).unwrap())
            .unwrap();
    let checkpoints = report["checkpoints"].as_array().unwrap();
    assert_eq!(checkpoints.len(), 2);
    let m_1e6 = checkpoints[1]["m"].as_f64().unwrap();
    assert!((m_1e6 - 0.1238).abs() < 0.002, "m at 1e6 = {m_1e6}");
    assert!(report["failures"].as_array().unwrap().is_empty());
    let m0 = report["m0"]["m0"].as_f64().unwrap();
    assert!((1.2..1.5).contains(&m0), "m0 = {m0}");
}

#[test]
fn fit_insufficient_census_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["census", "--limit", "1000", "--out", "d"], &[]);
    assert!(out.status.success());
    let out = twinsep(dir.path(), &["fit", "--out", "d"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("fit insufficient"), "stderr: {}", stderr(&out));
}

#[test]
fn fit_without_census_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["fit", "--out", "nowhere"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("census"), "stderr: {}", stderr(&out));
}

#[test]
fn predict_emits_default_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["predict", "--out", "p"], &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let table = fs::read_to_string(dir.path().join("p/predictions.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("# m0="));
    assert_eq!(lines[2], "n,log_n,f,s_l");
    assert_eq!(lines.len(), 3 + 24, "8 bounds x 3 risk factors");

    // rerun is byte-identical
    let out = twinsep(dir.path(), &["predict", "--out", "q"], &[]);
    assert!(out.status.success());
    let again = fs::read_to_string(dir.path().join("q/predictions.csv")).unwrap();
    assert_eq!(table, again);
}

#[test]
fn predict_band_mode_emits_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["predict", "--m0-band", "--out", "p"], &[]);
    assert!(out.status.success());
    for name in ["predictions.csv", "predictions_band_low.csv", "predictions_band_high.csv"] {
        assert!(dir.path().join("p").join(name).exists(), "missing {name}");
    }
    let low = fs::read_to_string(dir.path().join("p/predictions_band_low.csv")).unwrap();
    assert!(low.contains("# m0=1.31300000000e0"), "band low header:\n{low}");
}

#[test]
fn predict_inverts_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(
        dir.path(),
        &["predict", "--invert", "--s-l", "250", "--f", "1"],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("predicted N = 7.80676471791e9"), "stdout: {text}");
}

#[test]
fn compare_census_records_against_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["census", "--limit", "1e6", "--out", "d"], &[]);
    assert!(out.status.success());
    let out = twinsep(dir.path(), &["compare", "--out", "d"], &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    // 13 of the 14 records sit inside [0.1, 10]; the s=101 outlier at
    // N=851801 implies f ~ 0.034
    assert!(text.contains("pass fraction: 13/14"), "stdout: {text}");
    assert!(text.contains("101,851801,3.40682579008e-2,NO"), "stdout: {text}");

    let csv = fs::read_to_string(dir.path().join("d/comparison.csv")).unwrap();
    assert!(csv.contains("s,onset_N,twin_index,implied_f,in_band"));
    assert!(csv.contains("101,851801,7118,3.40682579008e-2,0"));
}

#[test]
fn compare_flags_synthetic_outlier() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("d")).unwrap();
    fs::write(
        dir.path().join("d/record_gaps.csv"),
        "s,onset_N,twin_index\n60,1000000,100\n500,1000000,200\n",
    )
    .unwrap();
    let out = twinsep(dir.path(), &["compare", "--out", "d"], &[]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pass fraction: 1/2"), "stdout: {text}");
    assert!(text.contains("verdict: FAIL"), "stdout: {text}");
}

#[test]
fn compare_with_no_records_passes_vacuously() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("d")).unwrap();
    fs::write(dir.path().join("d/record_gaps.csv"), "s,onset_N,twin_index\n").unwrap();
    let out = twinsep(dir.path(), &["compare", "--out", "d"], &[]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("verdict: PASS"));
    assert!(stderr(&out).contains("vacuous"));
}

#[test]
fn compare_without_census_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = twinsep(dir.path(), &["compare", "--out", "nowhere"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("census"));
}
