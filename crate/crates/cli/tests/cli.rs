use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fbchemo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbchemo"))
        .args(args)
        .env("FBCHEMO_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const COLLAPSE: &str = "\
mode = \"simulate\"
[problem]
n = 3
b = 0.5
k_law = { kind = \"linear\", a = 1 }
u0 = { kind = \"constant\", level = 24 }
[numerics]
grid_n = 64
t_end = 0.1
";

#[test]
fn simulate_reports_collapse_and_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", COLLAPSE);
    let out = tmp.path().join("out");
    let res = fbchemo(&[
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--snapshots",
        "0,0.01",
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let s = summary(&out);
    assert_eq!(s["regime"], "Shrinking");
    assert_eq!(s["event"], "Collapse");
    let t = s["event_time"].as_f64().unwrap();
    assert!((t - 0.0479472).abs() <= 5e-3, "{t}");
    let keys: Vec<&str> = s.as_object().unwrap().keys().map(String::as_str).collect();
    for key in [
        "params",
        "regime",
        "critical_mass",
        "event",
        "event_time",
        "oracle_event_time",
        "max_mass_drift",
        "picard_iterations",
        "contraction_factors",
    ] {
        assert!(keys.contains(&key), "missing {key}");
    }
    assert!(!keys.contains(&"diagnostic"));
    let series = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next(),
        Some("t,h,mass,u_max,vr_h,elliptic_residual,mass_drift")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[0], "0.0000000000000000e0");
    assert_eq!(first[1], "5.0000000000000000e-1");
    let profiles = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("t,r,u\n"));
    assert_eq!(profiles.lines().count(), 1 + 2 * 65);
    assert!(fs::read_to_string(out.join("h_overlay.csv"))
        .unwrap()
        .starts_with("t,h_simulated,h_analytic\n"));
    assert!(fs::read_to_string(out.join("run.log"))
        .unwrap()
        .contains("finish mode=simulate ok"));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", COLLAPSE);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let res = fbchemo(&[
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--grid",
            "32",
            "--snapshots",
            "0.02",
        ]);
        assert_eq!(res.status.code(), Some(0));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in [
        "timeseries.csv",
        "summary.json",
        "h_overlay.csv",
        "profiles.csv",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn summary_params_reproduce_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", COLLAPSE);
    let first = tmp.path().join("first");
    let res = fbchemo(&[
        "--config",
        &cfg,
        "--out",
        first.to_str().unwrap(),
        "--grid",
        "32",
        "--dt",
        "auto",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let again = tmp.path().join("again");
    let summary_path = first.join("summary.json");
    let res = fbchemo(&[
        "--config",
        summary_path.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    for file in ["timeseries.csv", "summary.json"] {
        assert_eq!(
            fs::read(first.join(file)).unwrap(),
            fs::read(again.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "[problem]\nn = 3\nM = 1\n");
    let out = tmp.path().join("out");
    let res = fbchemo(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown field"));
    assert!(!out.join("summary.json").exists());

    let res = fbchemo(&["--config", &cfg, "--mode", "bogus"]);
    assert_eq!(res.status.code(), Some(1));
    let missing = tmp.path().join("missing.toml");
    let res = fbchemo(&[
        "--config",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_two_with_diagnostic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "picard.toml",
        "mode = \"picard\"\n[numerics]\ngrid_n = 32\nt_end = 0.02\nm0 = 2\n",
    );
    let out = tmp.path().join("out");
    let res = fbchemo(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let s = summary(&out);
    assert!(s["diagnostic"].as_str().unwrap().contains("admissible set"));
    assert_eq!(s["regime"], "Shrinking");
}

#[test]
fn sweep_classifies_around_the_critical_mass() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.toml",
        "mode = \"sweep\"\n[problem]\nn = 3\nb = 0.5\nk_law = { kind = \"linear\", a = 1 }\n\
         [sweep]\nmass = [0.1, \"1/7\", 0.2]\n",
    );
    let out = tmp.path().join("out");
    let res = fbchemo(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let regimes: Vec<&str> = rows.iter().map(|r| r[6]).collect();
    assert_eq!(regimes, ["Growing", "Stationary", "Shrinking"]);
    for (i, row) in rows.iter().enumerate() {
        assert!((row[5].parse::<f64>().unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!(out
            .join("points")
            .join(format!("point_{i:04}.json"))
            .exists());
    }

    let again = tmp.path().join("again");
    let res = Command::new(env!("CARGO_BIN_EXE_fbchemo"))
        .args(["--config", &cfg, "--out", again.to_str().unwrap()])
        .env("FBCHEMO_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(table, fs::read_to_string(again.join("sweep.csv")).unwrap());
}

#[test]
fn oracle_stationary_series_is_constant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "oracle.toml",
        "mode = \"oracle\"\n[problem]\nn = 2\nb = 0.5\nmass = \"1/3\"\nk_law = { kind = \"linear\", a = 1 }\n\
         [numerics]\nt_end = 1\n",
    );
    let out = tmp.path().join("out");
    let res = fbchemo(&[
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--dt",
        "1/100",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["regime"], "Stationary");
    assert_eq!(s["event"], "None");
    assert!(s["oracle_event_time"].is_null());
    let series = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let hs: Vec<&str> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(hs.len(), 101);
    assert!(hs.iter().all(|&h| h == "5.0000000000000000e-1"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.toml",
        "mode = \"sweep\"\n[sweep]\nmass = [0.1]\n",
    );
    let res = Command::new(env!("CARGO_BIN_EXE_fbchemo"))
        .args([
            "--config",
            &cfg,
            "--out",
            tmp.path().join("out").to_str().unwrap(),
        ])
        .env("FBCHEMO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}
