//! End-to-end tests of the `uoptime` binary: exit codes, file outputs and
//! the optimize -> evaluate round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uoptime"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("UOPTIME_SEED")
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn write_schema(dir: &Path) -> PathBuf {
    let path = dir.join("schema.json");
    std::fs::write(
        &path,
        r#"{
  "levels": [
    {"name": "suite_run", "count": 3},
    {"name": "iteration", "count": 5},
    {"name": "second", "count": 5}
  ],
  "leaf_duration_s": 1.0,
  "parallel_levels": [],
  "unit": "ns/op",
  "value_semantics": "lower_is_better"
}"#,
    )
    .unwrap();
    path
}

fn write_grid_csv(
    dir: &Path,
    name: &str,
    benchmarks: &[(&str, &dyn Fn(usize, usize, usize) -> f64)],
) -> PathBuf {
    let path = dir.join(name);
    let mut body = String::from("benchmark,suite_run,iteration,second,value\n");
    for (bench, value) in benchmarks {
        for s in 1..=3usize {
            for i in 1..=5usize {
                for d in 1..=5usize {
                    body.push_str(&format!("{bench},{s},{i},{d},{}\n", value(s, i, d)));
                }
            }
        }
    }
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn optimize_constant_data_picks_minimal_configs() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(dir.path(), "data.csv", &[("a", &|_, _, _| 10.0), ("b", &|_, _, _| 25.0)]);

    let output = run(
        &[
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
            "--seed",
            "3",
            "--resamples",
            "200",
        ],
        dir.path(),
    );
    assert_exit(&output, 0);

    let result = std::fs::read_to_string(dir.path().join("out/result.csv")).unwrap();
    let rows: Vec<&str> = result.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1], "1x1x3");
        assert_eq!(fields[8], "ok");
    }
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn minimum_strategy_always_picks_the_floor_configuration() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(
        dir.path(),
        "data.csv",
        &[("a", &|s, i, d| (s * 100 + i * 10 + d) as f64)],
    );

    let output = run(
        &[
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--out-dir",
            "out",
            "--metric",
            "rmad",
            "--strategy",
            "minimum",
            "--resamples",
            "200",
        ],
        dir.path(),
    );
    assert_exit(&output, 0);
    let result = std::fs::read_to_string(dir.path().join("out/result.csv")).unwrap();
    for row in result.lines().skip(1) {
        assert_eq!(row.split(',').nth(1).unwrap(), "1x1x3");
    }
}

#[test]
fn missing_dataset_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    let output = run(
        &[
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "nope.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
        ],
        dir.path(),
    );
    assert_exit(&output, 2);
}

#[test]
fn malformed_data_exits_1_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    std::fs::write(
        dir.path().join("bad.csv"),
        "benchmark,suite_run,iteration,second,value\na,1,1,oops,10\n",
    )
    .unwrap();
    let output = run(
        &[
            "--error-json",
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "bad.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
        ],
        dir.path(),
    );
    assert_exit(&output, 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    let payload: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(payload["kind"], "validation");
    assert!(payload["error"].as_str().unwrap().contains("line"));
}

#[test]
fn optimize_output_round_trips_through_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(
        dir.path(),
        "data.csv",
        &[
            ("steady", &|_, _, _| 50.0),
            ("drifty", &|s, _, _| 50.0 * (1.0 + 0.02 * (s as f64 - 1.0))),
        ],
    );

    let output = run(
        &[
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
            "--threshold",
            "0.015",
            "--resamples",
            "200",
        ],
        dir.path(),
    );
    assert_exit(&output, 0);

    let output = run(
        &[
            "evaluate",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--result",
            "out/result.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
        ],
        dir.path(),
    );
    assert_exit(&output, 0);

    // The configurations survive the file boundary unchanged.
    let result = std::fs::read_to_string(dir.path().join("out/result.csv")).unwrap();
    let configs: Vec<(String, String)> = result
        .lines()
        .skip(1)
        .map(|row| {
            let fields: Vec<&str> = row.split(',').collect();
            (fields[0].to_string(), fields[1].to_string())
        })
        .collect();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/change_rates.json")).unwrap())
            .unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), configs.len());
    for (row, (bench, config)) in rows.iter().zip(&configs) {
        assert_eq!(row["benchmark"].as_str().unwrap(), bench);
        assert_eq!(row["configuration"].as_str().unwrap(), config);
    }
    assert_eq!(report["warnings"].as_array().unwrap().len(), 0);
}

#[test]
fn evaluate_requires_an_estimator_source() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(dir.path(), "data.csv", &[("a", &|_, _, _| 10.0)]);
    run(
        &[
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
            "--resamples",
            "200",
        ],
        dir.path(),
    );
    let output = run(
        &[
            "evaluate",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--result",
            "out/result.csv",
            "--out-dir",
            "out",
        ],
        dir.path(),
    );
    assert_exit(&output, 1);
}

#[test]
fn compare_identical_versions_reports_no_changes() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(
        dir.path(),
        "data.csv",
        &[("a", &|s, i, d| 100.0 + ((s * 7 + i * 3 + d) % 5) as f64 * 0.1)],
    );

    let output = run(
        &[
            "compare",
            "--schema",
            "schema.json",
            "--v1",
            "data.csv",
            "--v2",
            "data.csv",
            "--out-dir",
            "out",
            "--seed",
            "11",
            "--resamples",
            "500",
        ],
        dir.path(),
    );
    assert_exit(&output, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/comparison_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["changed"], 0);
    assert_eq!(summary["relevant"], 0);
}

#[test]
fn compare_disjoint_benchmark_sets_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(dir.path(), "v1.csv", &[("left", &|_, _, _| 10.0)]);
    write_grid_csv(dir.path(), "v2.csv", &[("right", &|_, _, _| 10.0)]);
    let output = run(
        &[
            "compare",
            "--schema",
            "schema.json",
            "--v1",
            "v1.csv",
            "--v2",
            "v2.csv",
            "--out-dir",
            "out",
            "--resamples",
            "200",
        ],
        dir.path(),
    );
    assert_exit(&output, 1);
}

#[test]
fn rmit_plan_properties_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "rmit-plan",
        "--benchmarks",
        "a,b",
        "--iterations",
        "2",
        "--suite-runs",
        "3",
        "--seed",
        "42",
    ];
    let first = run(&args, dir.path());
    assert_exit(&first, 0);
    let second = run(&args, dir.path());
    assert_eq!(first.stdout, second.stdout, "same seed, same schedule");

    let lines: Vec<Vec<String>> = String::from_utf8(first.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    for run_order in &lines {
        assert_eq!(run_order.len(), 4);
        assert_eq!(run_order.iter().filter(|b| *b == "a").count(), 2);
        assert_eq!(run_order.iter().filter(|b| *b == "b").count(), 2);
    }

    let empty = run(
        &[
            "rmit-plan",
            "--benchmarks",
            "",
            "--iterations",
            "1",
            "--suite-runs",
            "1",
        ],
        dir.path(),
    );
    assert_exit(&empty, 1);
}

#[test]
fn seed_env_var_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    write_schema(dir.path());
    write_grid_csv(dir.path(), "data.csv", &[("a", &|_, _, _| 10.0)]);
    let output = bin()
        .args([
            "optimize",
            "--schema",
            "schema.json",
            "--data",
            "data.csv",
            "--out-dir",
            "out",
            "--metric",
            "cv",
            "--resamples",
            "200",
        ])
        .current_dir(dir.path())
        .env("UOPTIME_SEED", "12345")
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], 12345);
}
