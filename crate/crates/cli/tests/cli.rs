use std::process::{Command, Output};

use serde_json::Value;

fn wlambda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlambda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn golden_level_three_has_seven_points() {
    let out = wlambda(&["levelset", "--multinacci", "2", "--n", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,value");
    assert_eq!(lines.len(), 8);
}

#[test]
fn perron_recovers_golden_ratio() {
    let out = wlambda(&["perron", "--m", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("1.6180339887"));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(wlambda(&["levelset", "--n", "3"]).status.code(), Some(2));
    assert_eq!(wlambda(&["levelset", "--lambda", "0.3", "--n", "3"]).status.code(), Some(2));
    assert_eq!(wlambda(&["levelset", "--lambda", "0.6", "--multinacci", "2", "--n", "3"]).status.code(), Some(2));
    assert_eq!(wlambda(&["verify", "tree", "--lambda", "0.6", "--alpha", "0.5", "--s", "0.1"]).status.code(), Some(2));
    assert_eq!(wlambda(&["verify", "tree", "--lambda", "0.6", "--alpha", "2", "--s", "0.1", "--sims", "0:1"]).status.code(), Some(2));
}

#[test]
fn small_inequality_grid_passes() {
    let out = wlambda(&["verify", "proximity-inequality", "--lambda-grid", "8", "--n-max", "5", "--k-max", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["verify", "rams", "--families", "5", "--seed", "11", "--points", "200"];
    assert_eq!(wlambda(&args).stdout, wlambda(&args).stdout);
    let args = ["verify", "cylinders", "--lambda", "0.65", "--trials", "20", "--seed", "4"];
    assert_eq!(wlambda(&args).stdout, wlambda(&args).stdout);
}

#[test]
fn json_carries_config_rows_and_verification() {
    let out = wlambda(&["--format", "json", "verify", "translation", "--trials", "50", "--seed", "3"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["command"], "verify translation");
    assert_eq!(doc["config"]["seed"], 3);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
    assert_eq!(doc["rows"][0]["within_four"], true);
    assert!(!doc["verification"]["asserted"].as_array().unwrap().is_empty());
    assert!(doc["verification"]["failed"].as_array().unwrap().is_empty());
}

#[test]
fn output_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("wlambda-cli-{}.csv", std::process::id()));
    let out = wlambda(&["-o", path.to_str().unwrap(), "beta", "sft", "--m", "2"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("state,label,next0,next1"));
    assert!(out.stdout.is_empty());
}
