//! End-to-end runs of the `kerr-ergo` binary: exit codes, config errors,
//! output files and manifest replay.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kerr_ergo::format::{read_series, write_series};
use kerr_ergo_core::evolve::TimeSeries;

fn kerr_ergo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-ergo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_config_key_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "steps = 1000\n\n[model]\ngama = 5.0\n").unwrap();
    let o = kerr_ergo(&["simulate", "-c", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.toml:4:"), "{}", stderr(&o));
}

#[test]
fn invalid_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kerr_ergo(&["simulate", "--set", "model.g=-1", "--steps", "100"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_analyze_and_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim = kerr_ergo(
        &[
            "simulate",
            "--set",
            "model.gamma=5",
            "--set",
            "state.nu=10",
            "--steps",
            "30000",
            "-o",
            "run",
        ],
        d,
    );
    assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
    let series = read_series(&d.join("run/mean_N.bin")).unwrap();
    assert_eq!(series.len(), 30_000);
    assert_eq!(series.dt, 0.1);

    let ana = kerr_ergo(&["analyze", "run/mean_N.bin", "-o", "run/analysis"], d);
    assert_eq!(ana.status.code(), Some(0), "{}", stderr(&ana));
    assert!(stdout(&ana).contains("-> chaotic"), "{}", stdout(&ana));
    for f in ["manifest.json", "spectrum.csv", "lyapunov.csv", "returns.csv"] {
        assert!(d.join("run/analysis").join(f).exists(), "{f}");
    }

    let again = kerr_ergo(&["simulate", "--from-manifest", "run/manifest.json", "-o", "again"], d);
    assert_eq!(again.status.code(), Some(0), "{}", stdout(&again));
    assert_eq!(
        fs::read(d.join("run/mean_N.bin")).unwrap(),
        fs::read(d.join("again/mean_N.bin")).unwrap()
    );

    let again = kerr_ergo(
        &[
            "analyze",
            "--from-manifest",
            "run/analysis/manifest.json",
            "-o",
            "again/analysis",
        ],
        d,
    );
    assert_eq!(again.status.code(), Some(0), "{}", stdout(&again));
    assert!(stdout(&again).contains("verdicts: identical"));
}

#[test]
fn replay_mismatch_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim = kerr_ergo(&["simulate", "--steps", "2000", "-o", "run"], d);
    assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
    let path = d.join("run/manifest.json");
    let mut doc: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let outputs = doc["outputs"].as_array_mut().unwrap();
    outputs[0]["sha256"] = serde_json::json!("0".repeat(64));
    fs::write(&path, serde_json::to_vec_pretty(&doc).unwrap()).unwrap();
    let o = kerr_ergo(&["simulate", "--from-manifest", "run/manifest.json", "-o", "again"], d);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("DIFFERS"));
}

#[test]
fn analyze_accepts_csv_series() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let values: Vec<f64> = (0..20_000).map(|j| (0.05 * j as f64).sin()).collect();
    let ts = TimeSeries::new(0.1, values, "sine").unwrap();
    write_series(&d.join("sine.bin"), &ts).unwrap();
    kerr_ergo::format::write_csv(&d.join("sine.csv"), &ts).unwrap();
    assert_eq!(read_series(&d.join("sine.csv")).unwrap().values, ts.values);
    let o = kerr_ergo(&["analyze", "sine.csv", "--set", "analysis.time_unit=1", "-o", "a"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("-> regular"), "{}", stdout(&o));
}

#[test]
fn fixtures_write_series_and_configs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = kerr_ergo(&["fixtures", "--out", "fx", "--samples", "5000"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in kerr_ergo::commands::FIXTURES {
        let s = read_series(&d.join("fx").join(format!("{name}.bin"))).unwrap();
        assert_eq!(s.len(), 5000);
        assert!(d.join("fx").join(format!("{name}.toml")).exists(), "{name}");
    }
}
