use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use podr_core::flow::io::format_snapshot_csv;
use podr_core::flow::{read_snapshot_file, Field2D};
use tempfile::TempDir;

fn podr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_podr")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "problem": "cavity",
  "grid": {{"nx": 16, "ny": 16}},
  "ensemble": {{"reynolds": [100, 200, 300, 400]}},
  "target": {{"reynolds": 250}},
  "case": "case1",
  "shot_grid": [1000, 10000],
  "seeds": [0, 1],
  "depth_grids": [16]{extra}
}}"#
    );
    let path = dir.join("small.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_converts_csv_to_snapshot_file() {
    let dir = TempDir::new().unwrap();
    let fields: Vec<Field2D> = (0..3).map(|k| Field2D::from_fn(4, 2, |i, j| (k * 10 + i + 4 * j) as f64 / 7.0)).collect();
    let mut inputs = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        let p = dir.path().join(format!("f{k}.csv"));
        std::fs::write(&p, format_snapshot_csv(f)).unwrap();
        inputs.push(p);
    }
    let out = dir.path().join("fields.pods");
    let mut args = vec!["ingest", "--output", s(&out)];
    args.extend(inputs.iter().map(|p| s(p)));
    let o = podr(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_snapshot_file(&out).unwrap(), fields);
}

#[test]
fn config_problems_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(podr(&["offline"]).status.code(), Some(2));
    let bad_key = small_config(dir.path(), r#", "colour": "blue""#);
    assert_eq!(podr(&["offline", "--config", s(&bad_key)]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(podr(&["sweep", "--config", s(&broken)]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(podr(&["sweep", "--config", s(&missing)]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), r#", "solver": {"tol": 1e-12, "max_iters": 3}"#);
    let o = podr(&["offline", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_subcommand_runs_on_a_small_cavity() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("out");
    let run = |cmd: &[&str]| {
        let mut args = cmd.to_vec();
        args.extend(["--config", s(&cfg), "--out", s(&out), "--threads", "1"]);
        let o = podr(&args);
        assert!(o.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };

    run(&["solve"]);
    assert!(out.join("snapshots/ensemble_ux.pods").is_file());
    assert_eq!(read_snapshot_file(&out.join("snapshots/ensemble_uy.pods")).unwrap().len(), 4);

    let first = stdout(&run(&["offline"]));
    assert!(first.contains("ux: n_b=") && !first.contains("reused"), "{first}");
    assert!(stdout(&run(&["offline"])).contains("(reused)"));

    run(&["readout", "--shots", "4000"]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("readout.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 6);

    run(&["sweep", "--seed", "3"]);
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(rows.iter().all(|r| r.split(',').nth(5) == Some("3")));
    assert!(out.join("sweep_medians.csv").is_file());

    run(&["param-study"]);
    assert_eq!(std::fs::read_to_string(out.join("param_study.csv")).unwrap().lines().count(), 1 + 2 * 21);

    run(&["depth-study"]);
    assert_eq!(std::fs::read_to_string(out.join("depth_study.csv")).unwrap().lines().count(), 1 + 2);

    run(&["visualize"]);
    for name in ["truth_psi.csv", "podr_ux.csv", "rsr.svg", "fsr_uy.csv", "index.csv"] {
        assert!(out.join("visual").join(name).is_file(), "{name}");
    }
}

#[test]
fn shipped_transient_config_runs_offline() {
    let dir = TempDir::new().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/transient_case2.json");
    let o = podr(&["offline", "--config", cfg, "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("ux: n_b=") && text.contains("uy: n_b="), "{text}");
    assert!(dir.path().join("offline/manifest.json").is_file());
}
