mod common;

use std::fs;

use common::{run_cli, shift_fixture, snapshot, write_pipe};
use serde_json::Value;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn synthetic_corpus_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(run_cli(&["synth-corpus", "--out", d]).status.success());
    let config = dir.path().join("experiment.toml");
    let out = run_cli(&["corpus-stats", "-c", config.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    // 25 sections x 2 files x 1 EntRel record.
    assert_eq!(stats["corpus"]["skipped"]["EntRel"], 50);
    assert_eq!(stats["corpus"]["files"], 50);
    let splits = stats["splits"].as_array().unwrap();
    let names: Vec<&str> = splits.iter().map(|s| s[0].as_str().unwrap()).collect();
    assert_eq!(names, ["train", "dev", "test"]);
    // Test split: 2 sections x 2 files x 6 implicit relations.
    assert_eq!(splits[2][1][0]["relations"], 24);
}

#[test]
fn empty_corpus_directory_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("pdtb")).unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "[corpus]\ndir = \"pdtb\"\n").unwrap();
    let out = run_cli(&["corpus-stats", "-c", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("files 0"));
}

#[test]
fn missing_inventory_is_a_config_error_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("pdtb")).unwrap();
    let config = dir.path().join("c.toml");
    fs::write(
        &config,
        "[corpus]\ndir = \"pdtb\"\n[inventory]\npath = \"missing.txt\"\n[run]\noutput_dir = \"out\"\n",
    )
    .unwrap();
    let out = run_cli(&["run", "-c", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("connective inventory"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_record_is_a_data_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("pdtb/02");
    fs::create_dir_all(&sub).unwrap();
    fs::write(sub.join("wsj_0200.pipe"), "Explicit|02|only three fields\n").unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "[corpus]\ndir = \"pdtb\"\n").unwrap();
    let out = run_cli(&["corpus-stats", "-c", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("02/wsj_0200.pipe:1:"), "{err}");
}

#[test]
fn missing_score_row_is_a_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = shift_fixture(dir.path());
    fs::write(dir.path().join("scores.jsonl"), "").unwrap();
    let out = run_cli(&["run", "-c", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ngram_backend_rejects_masked_mode_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_cli(&["synth-corpus", "--out", d]);
    let config = dir.path().join("experiment.toml");
    let out = run_cli(&["score", "-c", config.to_str().unwrap(), "--backend", "ngram", "--mode", "masked"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shift_fixture_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = shift_fixture(dir.path());
    let out = run_cli(&["run", "-c", config.to_str().unwrap(), "--conn-probs"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/test/level1/report.json")).unwrap()).unwrap();
    let shift = &report["shift"];
    assert_eq!(shift["changed"], 1);
    assert_eq!(shift["total"], 5);
    assert_eq!(shift["most_frequent_shift"]["from"], "Expansion");
    assert_eq!(shift["most_frequent_shift"]["to"], "Contingency");

    let preds = fs::read_to_string(dir.path().join("out/test/level1/predictions.jsonl")).unwrap();
    let first: Value = serde_json::from_str(preds.lines().next().unwrap()).unwrap();
    assert_eq!(first["method"], "pipeline");
    assert_eq!(first["top_connective"], "and");
    assert_eq!(first["conn_probs"].as_array().unwrap().len(), 4);
}

#[test]
fn stages_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = shift_fixture(dir.path());
    let c = config.to_str().unwrap();
    assert!(run_cli(&["score", "-c", c]).status.success());
    let dists = dir.path().join("out/test/distributions.jsonl");
    assert_eq!(fs::read_to_string(&dists).unwrap().lines().count(), 5);

    // Distributions from the file reproduce the direct shift report.
    let d = dists.to_str().unwrap();
    let out = run_cli(&["shift-report", "-c", c, "--distributions", d]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("changed 1 of 5"));

    assert!(run_cli(&["predict", "-c", c, "--distributions", d]).status.success());
    let preds = dir.path().join("out/test/level1/predictions.jsonl");
    let out = run_cli(&["shift-report", "-c", c, "--predictions", preds.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("Expansion -> Contingency: 1"));

    let out = run_cli(&["agreement", "-c", c, "--distributions", d]);
    assert!(out.status.success());
    let agreement: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/test/level1/agreement.json")).unwrap()).unwrap();
    assert_eq!(agreement["eligible"], 5);

    let out = run_cli(&["confusion", "-c", c, "--distributions", d, "--top-k", "1"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out/test/confusion.csv")).unwrap();
    assert_eq!(csv, "predicted\\gold,and\nand,3\n");

    let out = run_cli(&["evaluate", "-c", c, "--distributions", d]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("macro-F1"));

    assert!(run_cli(&["train-classifier", "-c", c]).status.success());
    let model = fs::read_to_string(dir.path().join("out/classifier_level1.json")).unwrap();
    assert!(model.contains("\"because\""));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = shift_fixture(dir.path());
    let other = dir.path().join("elsewhere");
    let out = run_cli(&[
        "run",
        "-c",
        config.to_str().unwrap(),
        "--output-dir",
        other.to_str().unwrap(),
        "--backend",
        "uniform",
        "--methods",
        "pipeline",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(other.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["backend"], "uniform");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(other.join("test/level1/report.json")).unwrap()).unwrap();
    assert!(report["methods"].get("marginal").is_none());
    assert!(report["shift"].is_null());
}

#[test]
fn pipe_fixture_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_pipe(dir.path(), 21, "x.pipe", &[common::implicit(21, "and", "Expansion")]);
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.split('|').count(), 48);
    assert!(snapshot(dir.path()).len() == 1);
}
