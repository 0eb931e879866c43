use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use handover_core::data::{records_to_string, save_records};
use handover_core::feature::{BodyKeypoints, FeatureRecord, Keypoint};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handover"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_error(out: &Output, code: i32, category: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(
        stderr.starts_with(&format!("error[{category}]: ")),
        "{stderr}"
    );
}

fn bare_record() -> FeatureRecord {
    let pts: Vec<Keypoint> = (0..17)
        .map(|i| Keypoint::new(100.0 + i as f64, 200.0 - i as f64, 0.9))
        .collect();
    FeatureRecord {
        frame_id: "lonely".into(),
        source_video: "v".into(),
        label: None,
        objects: vec![],
        keypoints: BodyKeypoints::from_slice(&pts).unwrap(),
        head_pose: None,
    }
}

#[test]
fn generate_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.json"),
        dir.path().join("b.json"),
        dir.path().join("c.json"),
    );
    ok(&["generate", "--out", s(&a), "--n", "120", "--seed", "4"]);
    ok(&["generate", "--out", s(&b), "--n", "120", "--seed", "4"]);
    ok(&["generate", "--out", s(&c), "--n", "120", "--seed", "5"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn train_then_predict_handles_missing_detections() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    let model = dir.path().join("m.json");
    let query = dir.path().join("q.json");
    ok(&["generate", "--out", s(&data), "--n", "200", "--seed", "1"]);
    ok(&[
        "train",
        "--in",
        s(&data),
        "--out",
        s(&model),
        "--epochs",
        "5",
        "--normalize",
    ]);
    assert!(dir.path().join("m.json.history.json").exists());
    save_records(&[bare_record()], &query).unwrap();

    let stdout = ok(&["predict", "--in", s(&query), "--model", s(&model)]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["frame_id"], "lonely");
    let p = v["probability"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0);
    let label = v["label"].as_u64().unwrap();
    assert_eq!(label, u64::from(p >= 0.5));

    // a threshold equal to p flips the label to 1 without touching p
    let threshold = p.to_string();
    let stdout = ok(&[
        "predict",
        "--in",
        s(&query),
        "--model",
        s(&model),
        "--threshold",
        &threshold,
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["label"], 1);
    assert_eq!(v["probability"].as_f64().unwrap(), p);
}

#[test]
fn commands_leave_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    let model = dir.path().join("m.json");
    ok(&["generate", "--out", s(&data), "--n", "150", "--seed", "2"]);
    let before = fs::read(&data).unwrap();
    ok(&["inspect", "--in", s(&data)]);
    ok(&[
        "train",
        "--in",
        s(&data),
        "--out",
        s(&model),
        "--epochs",
        "3",
    ]);
    let model_before = fs::read(&model).unwrap();
    ok(&["eval", "--in", s(&data), "--splits", "2", "--epochs", "3"]);
    ok(&[
        "compare",
        "--in",
        s(&data),
        "--splits",
        "1",
        "--epochs",
        "3",
        "--shift",
        "-10,4",
    ]);
    ok(&[
        "predict",
        "--in",
        s(&data),
        "--model",
        s(&model),
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert_eq!(fs::read(&data).unwrap(), before);
    assert_eq!(fs::read(&model).unwrap(), model_before);
}

#[test]
fn inspect_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    save_records(&[bare_record()], &data).unwrap();
    let out = ok(&["inspect", "--in", s(&data)]);
    assert!(out.contains("records: 1"));
    assert!(out.contains("unlabeled: 1"));
    assert!(out.contains("without object: 1"));
    assert!(out.contains("without head pose: 1"));
}

#[test]
fn eval_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    let (json, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    ok(&["generate", "--out", s(&data), "--n", "200", "--seed", "9"]);
    let table = ok(&[
        "eval",
        "--in",
        s(&data),
        "--splits",
        "3",
        "--epochs",
        "5",
        "--out",
        s(&json),
        "--csv",
        s(&csv),
    ]);
    assert!(table.contains("layout: relative"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["accuracies"].as_array().unwrap().len(), 3);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 4);
}

#[test]
fn io_errors_exit_1() {
    assert_error(
        &run(&["inspect", "--in", "/nonexistent/records.json"]),
        1,
        "io",
    );
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[{\"frame_id\": \"x\"").unwrap();
    assert_error(&run(&["inspect", "--in", s(&bad)]), 2, "schema");

    let mut r = bare_record();
    r.label = Some(1);
    let text = records_to_string(&[r]).unwrap().replace("0.9]", "1.5]");
    fs::write(&bad, text).unwrap();
    assert_error(&run(&["inspect", "--in", s(&bad)]), 2, "schema");

    let model = dir.path().join("m.json");
    fs::write(&model, "{\"version\": 2}").unwrap();
    let data = dir.path().join("d.json");
    save_records(&[bare_record()], &data).unwrap();
    assert_error(
        &run(&["predict", "--in", s(&data), "--model", s(&model)]),
        2,
        "schema",
    );
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    ok(&["generate", "--out", s(&data), "--n", "50", "--seed", "1"]);
    let m = dir.path().join("m.json");
    assert_error(
        &run(&[
            "train",
            "--in",
            s(&data),
            "--out",
            s(&m),
            "--layout",
            "polar",
        ]),
        3,
        "config",
    );
    assert_error(
        &run(&["train", "--in", s(&data), "--out", s(&m), "--hidden", "8,8"]),
        3,
        "config",
    );
    assert_error(
        &run(&["train", "--in", s(&data), "--out", s(&m), "--lr", "-1"]),
        3,
        "config",
    );
    assert_error(
        &run(&["eval", "--in", s(&data), "--ratio", "1.5"]),
        3,
        "config",
    );
    assert_error(
        &run(&["generate", "--out", s(&m), "--pos-frac", "2"]),
        3,
        "config",
    );
    assert_error(&run(&["inspect", "--in", s(&data), "--bogus"]), 3, "config");
    assert_error(&run(&["frobnicate"]), 3, "config");
    assert!(!m.exists());

    // unlabeled records cannot be trained on
    let bare = dir.path().join("bare.json");
    save_records(&[bare_record()], &bare).unwrap();
    let out = run(&["train", "--in", s(&bare), "--out", s(&m)]);
    assert!(!out.status.success());
}
