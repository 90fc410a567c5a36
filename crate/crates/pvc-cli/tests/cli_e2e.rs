//! End-to-end runs of the `pvc` binary: exit codes, file outputs, and
//! byte-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvc"))
        .args(args)
        .output()
        .expect("failed to launch pvc")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Parses a score table into (kind, name, score) triples.
fn read_scores(path: &Path) -> Vec<(String, String, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 3, "bad row: {line}");
            (
                fields[0].to_string(),
                fields[1].to_string(),
                fields[2].parse().unwrap(),
            )
        })
        .collect()
}

fn score_of(rows: &[(String, String, f64)], kind: &str, name: &str) -> f64 {
    rows.iter()
        .find(|(k, n, _)| k == kind && n == name)
        .unwrap_or_else(|| panic!("no {kind} row for {name}"))
        .2
}

fn write_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let messages = dir.join("messages.tsv");
    fs::write(&messages, "m1\tu1\tu2\tbadword\n").unwrap();
    let seeds = dir.join("seeds.txt");
    fs::write(&seeds, "badword\n").unwrap();
    (messages, seeds)
}

#[test]
fn train_single_seed_fixture_recovers_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let (messages, seeds) = write_fixture(dir.path());
    let out = dir.path().join("run");
    let output = pvc(&[
        "train",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--tol",
        "0",
        "--max-iters",
        "200",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let rows = read_scores(&out.join("scores.tsv"));
    assert_eq!(score_of(&rows, "word", "badword"), 1.0);
    assert!((score_of(&rows, "bully", "u1") - 1.0 / 3.0).abs() < 1e-9);
    assert!((score_of(&rows, "victim", "u2") - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(score_of(&rows, "bully", "u2"), 0.0);
    assert_eq!(score_of(&rows, "victim", "u1"), 0.0);

    let trace = fs::read_to_string(out.join("trace.tsv")).unwrap();
    assert!(trace.starts_with("0\t"), "trace starts at iteration 0");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn train_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (messages, seeds) = write_fixture(dir.path());
    let mut artifacts: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let output = pvc(&[
            "train",
            "--messages",
            messages.to_str().unwrap(),
            "--seeds",
            seeds.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        artifacts.push((
            fs::read(out.join("scores.tsv")).unwrap(),
            fs::read(out.join("trace.tsv")).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0);
    assert_eq!(artifacts[0].1, artifacts[1].1);
}

#[test]
fn train_missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "badword\n").unwrap();
    let output = pvc(&[
        "train",
        "--messages",
        "/nonexistent/corpus.tsv",
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("/nonexistent/corpus.tsv"));
}

#[test]
fn train_without_seed_hits_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (messages, _) = write_fixture(dir.path());
    let seeds = dir.path().join("ghost.txt");
    fs::write(&seeds, "ghostword\n").unwrap();
    let output = pvc(&[
        "train",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("ghostword"), "stderr: {err}");
    assert!(err.contains("no seed phrase"), "stderr: {err}");
}

#[test]
fn train_empty_seed_lexicon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (messages, _) = write_fixture(dir.path());
    let seeds = dir.path().join("empty.txt");
    fs::write(&seeds, "").unwrap();
    let output = pvc(&[
        "train",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn baseline_unknown_method_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (messages, seeds) = write_fixture(dir.path());
    let output = pvc(&[
        "baseline",
        "--method",
        "frobnicate",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn baseline_cooccur_scores_fixture_words() {
    let dir = tempfile::tempdir().unwrap();
    let messages = dir.path().join("messages.tsv");
    fs::write(
        &messages,
        "m1\tu1\tu2\tbadword friend\nm2\tu3\tu4\tinnocent chatter\n",
    )
    .unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "badword\n").unwrap();
    let out = dir.path().join("out");
    let output = pvc(&[
        "baseline",
        "--method",
        "cooccur",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--ngram-orders",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let rows = read_scores(&out.join("scores.tsv"));
    assert_eq!(score_of(&rows, "word", "badword"), 1.0);
    assert_eq!(score_of(&rows, "word", "friend"), 1.0);
    assert_eq!(score_of(&rows, "word", "innocent"), 0.0);
    assert_eq!(score_of(&rows, "word", "chatter"), 0.0);
}

#[test]
fn baseline_dqe_with_absent_seeds_warns_and_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let messages = dir.path().join("messages.tsv");
    fs::write(&messages, "m1\tu1\tu2\thello world\n").unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "ghostword\n").unwrap();
    let out = dir.path().join("out");
    let output = pvc(&[
        "baseline",
        "--method",
        "dqe",
        "--messages",
        messages.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("degenerate"));
    let rows = read_scores(&out.join("scores.tsv"));
    assert!(rows.iter().all(|(_, _, s)| *s == 0.0));
}

#[test]
fn eval_four_word_fixture_reports_expected_auc() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.tsv");
    fs::write(
        &scores,
        "word\tt1\t0.9\nword\tn1\t0.8\nword\tt2\t0.7\nword\tn2\t0.1\n",
    )
    .unwrap();
    let targets = dir.path().join("targets.txt");
    fs::write(&targets, "t1\nt2\n").unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "").unwrap();
    let out = dir.path().join("out");
    let output = pvc(&[
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--targets",
        targets.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--k",
        "2",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let roc = fs::read_to_string(out.join("roc.tsv")).unwrap();
    assert!(roc.trim_end().ends_with("# auc = 0.75"), "roc: {roc}");

    let top = read_scores(&out.join("top_words.tsv"));
    assert_eq!(top.len(), 2);
    assert_eq!(top[0].1, "t1");
    assert_eq!(top[1].1, "n1");

    let lift_rows = fs::read_to_string(out.join("lift.tsv")).unwrap();
    let lift_value: f64 = lift_rows.trim().split('\t').nth(2).unwrap().parse().unwrap();
    assert!(lift_value > 0.0);
}

#[test]
fn eval_perfect_separation_reports_auc_one() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.tsv");
    fs::write(&scores, "word\tt1\t0.9\nword\tt2\t0.8\nword\tn1\t0.2\nword\tn2\t0.1\n").unwrap();
    let targets = dir.path().join("targets.txt");
    fs::write(&targets, "t1\nt2\n").unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "").unwrap();
    let out = dir.path().join("out");
    let output = pvc(&[
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--targets",
        targets.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let roc = fs::read_to_string(out.join("roc.tsv")).unwrap();
    assert!(roc.trim_end().ends_with("# auc = 1"), "roc: {roc}");
}

#[test]
fn eval_constant_scores_exits_3_after_writing_roc() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.tsv");
    fs::write(&scores, "word\ta\t0.5\nword\tb\t0.5\nword\tc\t0.5\n").unwrap();
    let targets = dir.path().join("targets.txt");
    fs::write(&targets, "a\n").unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "").unwrap();
    let out = dir.path().join("out");
    let output = pvc(&[
        "eval",
        "--scores",
        scores.to_str().unwrap(),
        "--targets",
        targets.to_str().unwrap(),
        "--seeds",
        seeds.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr(&output).contains("degenerate"));
    // The ROC artifact still lands: constant scores are chance level.
    let roc = fs::read_to_string(out.join("roc.tsv")).unwrap();
    assert!(roc.trim_end().ends_with("# auc = 0.5"), "roc: {roc}");
    assert!(!out.join("lift.tsv").exists());
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn synth_outputs_feed_straight_back_into_train() {
    let dir = tempfile::tempdir().unwrap();
    let synth_out = dir.path().join("synth");
    let output = pvc(&[
        "synth",
        "--n-messages",
        "120",
        "--rng-seed",
        "7",
        "--out-dir",
        synth_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    for file in [
        "messages.tsv",
        "seed_lexicon.txt",
        "target_lexicon.txt",
        "ground_truth.tsv",
        "manifest.json",
    ] {
        assert!(synth_out.join(file).exists(), "missing {file}");
    }

    let train_out = dir.path().join("train");
    let output = pvc(&[
        "train",
        "--messages",
        synth_out.join("messages.tsv").to_str().unwrap(),
        "--seeds",
        synth_out.join("seed_lexicon.txt").to_str().unwrap(),
        "--out-dir",
        train_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
}

#[test]
fn synth_infeasible_coverage_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let output = pvc(&[
        "synth",
        "--n-messages",
        "1",
        "--n-words",
        "30",
        "--n-bully-words",
        "20",
        "--bully-user-fraction",
        "1e-9",
        "--score-noise",
        "0",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr(&output).contains("cover"));
}

#[test]
fn synth_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = pvc(&[
        "synth",
        "--n-bully-words",
        "99",
        "--n-words",
        "10",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

/// Runs the full pipeline (synth -> train -> baseline -> eval) into `root`
/// and returns the paths of every data artifact produced.
fn run_pipeline(root: &Path) -> Vec<PathBuf> {
    let synth_out = root.join("synth");
    let output = pvc(&[
        "synth",
        "--n-messages",
        "150",
        "--n-users",
        "12",
        "--rng-seed",
        "99",
        "--out-dir",
        synth_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let train_out = root.join("train");
    let output = pvc(&[
        "train",
        "--messages",
        synth_out.join("messages.tsv").to_str().unwrap(),
        "--seeds",
        synth_out.join("seed_lexicon.txt").to_str().unwrap(),
        "--out-dir",
        train_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let baseline_out = root.join("baseline");
    let output = pvc(&[
        "baseline",
        "--method",
        "dqe",
        "--messages",
        synth_out.join("messages.tsv").to_str().unwrap(),
        "--seeds",
        synth_out.join("seed_lexicon.txt").to_str().unwrap(),
        "--out-dir",
        baseline_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let eval_out = root.join("eval");
    let output = pvc(&[
        "eval",
        "--scores",
        train_out.join("scores.tsv").to_str().unwrap(),
        "--targets",
        synth_out.join("target_lexicon.txt").to_str().unwrap(),
        "--seeds",
        synth_out.join("seed_lexicon.txt").to_str().unwrap(),
        "--out-dir",
        eval_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    vec![
        synth_out.join("messages.tsv"),
        synth_out.join("seed_lexicon.txt"),
        synth_out.join("target_lexicon.txt"),
        synth_out.join("ground_truth.tsv"),
        train_out.join("scores.tsv"),
        train_out.join("trace.tsv"),
        baseline_out.join("scores.tsv"),
        eval_out.join("roc.tsv"),
        eval_out.join("top_words.tsv"),
        eval_out.join("lift.tsv"),
    ]
}

#[test]
fn pipeline_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_pipeline(&dir.path().join("one"));
    let second = run_pipeline(&dir.path().join("two"));
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        let bytes_a = fs::read(a).unwrap();
        let bytes_b = fs::read(b).unwrap();
        assert_eq!(
            bytes_a,
            bytes_b,
            "artifacts differ: {} vs {}",
            a.display(),
            b.display()
        );
    }
    // Manifests carry wall-clock durations, but their recorded output
    // digests must match between the runs.
    for sub in ["synth", "train", "baseline", "eval"] {
        let read = |root: &str| -> serde_json::Value {
            serde_json::from_str(
                &fs::read_to_string(dir.path().join(root).join(sub).join("manifest.json"))
                    .unwrap(),
            )
            .unwrap()
        };
        let ma = read("one");
        let mb = read("two");
        let digests = |m: &serde_json::Value| -> Vec<String> {
            m["outputs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|o| o["sha256"].as_str().unwrap().to_string())
                .collect()
        };
        assert_eq!(digests(&ma), digests(&mb), "{sub} manifests disagree");
    }
}
