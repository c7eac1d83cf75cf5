//! End-to-end checks of the `brokers` binary against a temp directory.

use std::path::Path;
use std::process::{Command, Output};

fn brokers(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brokers"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn synth_then_scores_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &["--out", "o", "--seed", "5", "synth", "--nodes", "200", "--cascades", "80"],
        dir.path(),
    ));
    assert!(dir.path().join("o/graph.edges").exists());
    assert!(dir.path().join("o/cascades.jsonl").exists());
    ok(&brokers(&["--out", "o", "--seed", "5", "scores"], dir.path()));
    let csv = std::fs::read_to_string(dir.path().join("o/scores.csv")).unwrap();
    assert!(csv.starts_with("user,source_score,broker_score,retweet_count,broker_per_retweet"));
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn pipeline_runs_selected_stages_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &[
            "--out", "o", "--seed", "9", "--threads", "2",
            "pipeline", "--stages", "synth,ingest,scores,centrality,overlap",
        ],
        dir.path(),
    ));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("o/overlap.json").exists());
}

#[test]
fn embed_learns_then_transfers_definitions() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &["--out", "o", "synth", "--nodes", "150", "--cascades", "50"],
        dir.path(),
    ));
    ok(&brokers(
        &["--out", "o", "embed", "--ego-distance", "1", "--bins", "5"],
        dir.path(),
    ));
    let defs = dir.path().join("o/feature_defs.json");
    assert!(defs.exists());
    let first = std::fs::read_to_string(dir.path().join("o/embedding.csv")).unwrap();
    // Transferring the learned recipes back to the same graph reproduces
    // the embedding file.
    ok(&brokers(
        &[
            "--out", "o", "embed", "--ego-distance", "1", "--bins", "5",
            "--transfer", "o/feature_defs.json",
            "--graph", "o/graph.edges", "--cascades", "o/cascades.jsonl",
        ],
        dir.path(),
    ));
    let second = std::fs::read_to_string(dir.path().join("o/embedding.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn train_reports_metrics_and_evaluate_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &["--out", "o", "synth", "--nodes", "400", "--cascades", "200", "--activation-prob", "0.3"],
        dir.path(),
    ));
    let stdout = ok(&brokers(
        &[
            "--out", "o", "evaluate", "--feature-mode", "centrality",
            "--p", "20", "--q", "0.5", "--budget", "2", "--runs", "2",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("\"precision\""), "missing report JSON: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    assert!(report["f1"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["metadata"]["feature_set"], "centrality");
}

#[test]
fn transfer_between_two_synthetic_domains() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &["--out", "a", "--seed", "1", "synth", "--nodes", "300", "--cascades", "150", "--activation-prob", "0.3"],
        dir.path(),
    ));
    ok(&brokers(
        &["--out", "b", "--seed", "2", "synth", "--nodes", "300", "--cascades", "150", "--activation-prob", "0.3"],
        dir.path(),
    ));
    let stdout = ok(&brokers(
        &[
            "--out", "a", "transfer", "--feature-mode", "centrality",
            "--p", "20", "--q", "0.5", "--budget", "2", "--runs", "2",
            "--graph", "a/graph.edges", "--cascades", "a/cascades.jsonl",
            "--target-graph", "b/graph.edges", "--target-cascades", "b/cascades.jsonl",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("transfer:"), "unexpected output: {stdout}");
    assert!(dir.path().join("a/transfer_report.json").exists());
}

#[test]
fn sweep_writes_one_row_per_fraction() {
    let dir = tempfile::tempdir().unwrap();
    ok(&brokers(
        &["--out", "o", "synth", "--nodes", "400", "--cascades", "200", "--activation-prob", "0.3"],
        dir.path(),
    ));
    ok(&brokers(
        &[
            "--out", "o", "sweep", "--feature-mode", "centrality",
            "--p", "20", "--budget", "2", "--runs", "2", "--fractions", "0.3,0.5",
        ],
        dir.path(),
    ));
    let csv = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
}

#[test]
fn missing_inputs_fail_with_clear_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = brokers(&["--out", "o", "scores"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("synth"), "unhelpful error: {stderr}");
}

#[test]
fn unknown_score_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = brokers(&["--out", "o", "label", "--score", "fame"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown score"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "out_dir": "from_config",
        "seed": 3,
        "synth": { "nodes": 120, "cascade_count": 40 }
    });
    std::fs::write(dir.path().join("run.json"), config.to_string()).unwrap();
    ok(&brokers(&["--config", "run.json", "synth"], dir.path()));
    assert!(dir.path().join("from_config/graph.edges").exists());
    ok(&brokers(
        &["--config", "run.json", "--out", "elsewhere", "synth"],
        dir.path(),
    ));
    assert!(dir.path().join("elsewhere/graph.edges").exists());
}
