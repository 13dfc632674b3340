//! Command-level behaviour: exit codes, error messages, output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn sentio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentio"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    let text = format!("data_dir = {}\n{body}", fixtures().display());
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_TRAIN: &str = "ppo.total_timesteps = 128\nppo.rollout_horizon = 64\nppo.hidden = 8\n";

#[test]
fn model_trained_with_sentiment_rejects_env_without() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let with = write_config(dir.path(), "with.cfg", &format!("symbols = AAA\nsentiment_enabled = true\n{SMALL_TRAIN}"));
    let without = write_config(dir.path(), "without.cfg", "symbols = AAA\neval.episodes = 1\neval.steps = 5\n");
    assert!(sentio(&["--config", &with, "--out", out, "train"]).status.success());
    let model = format!("{out}/model.txt");
    let o = sentio(&["--config", &without, "--out", out, "evaluate", "--model", &model]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("30") && stderr(&o).contains("29"), "{}", stderr(&o));
}

#[test]
fn zero_step_evaluation_reports_zero_profit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", &format!("symbols = BBB\neval.episodes = 1\neval.steps = 0\n{SMALL_TRAIN}"));
    assert!(sentio(&["--config", &cfg, "--out", out, "train"]).status.success());
    assert!(sentio(&["--config", &cfg, "--out", out, "evaluate"]).status.success());
    let episodes = std::fs::read_to_string(format!("{out}/episodes.csv")).unwrap();
    assert_eq!(episodes.lines().nth(1), Some("0,10000,10000,0"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "symbols = AAA\nppo.gamma = nope\n");
    assert_eq!(sentio(&["--config", &bad, "ingest"]).status.code(), Some(2));
    let two = write_config(dir.path(), "two.cfg", "symbols = AAA, BBB\nmode = single\n");
    assert_eq!(sentio(&["--config", &two, "ingest"]).status.code(), Some(2));
    let none = write_config(dir.path(), "none.cfg", "");
    assert_eq!(sentio(&["--config", &none, "ingest"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    std::fs::write(&labels, "Date,Symbol,Label\n2024-01-02,AAA,Positive\n2024-01-03,AAA,Sunny\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "c.cfg",
        &format!("symbols = AAA\nsentiment_file = {}\n", labels.display()),
    );
    let o = sentio(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "ingest"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3") && stderr(&o).contains("Sunny"), "{}", stderr(&o));

    let missing = write_config(dir.path(), "m.cfg", "symbols = ZZZ\n");
    assert_eq!(sentio(&["--config", &missing, "ingest"]).status.code(), Some(3));
}

#[test]
fn ingest_reports_neutral_fill() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "symbols = AAA, CCC, NOPE\nmode = portfolio\n");
    let out = dir.path().join("ingest");
    assert!(sentio(&["--config", &cfg, "--out", out.to_str().unwrap(), "ingest"]).status.success());
    let report = std::fs::read_to_string(out.join("dataset.check")).unwrap();
    assert!(report.contains("symbols = AAA,CCC\n"));
    assert!(report.contains("missing = NOPE\n"));
    assert!(report.contains("neutral_fill_ratio = 1\n"));

    // full coverage: label every aligned day
    let labels = dir.path().join("full.csv");
    let mut text = String::from("Date,Symbol,Label\n");
    for line in std::fs::read_to_string(fixtures().join("AAA.csv")).unwrap().lines().skip(1) {
        let date = line.split(',').next().unwrap();
        text.push_str(&format!("{date},AAA,Neutral\n{date},CCC,Positive\n"));
    }
    std::fs::write(&labels, text).unwrap();
    let cfg = write_config(
        dir.path(),
        "full.cfg",
        &format!("symbols = AAA, CCC\nmode = portfolio\nsentiment_file = {}\n", labels.display()),
    );
    assert!(sentio(&["--config", &cfg, "--out", out.to_str().unwrap(), "ingest"]).status.success());
    let report = std::fs::read_to_string(out.join("dataset.check")).unwrap();
    assert!(report.contains("neutral_fill_ratio = 0\n"), "{report}");
}

#[test]
fn labeling_is_pure() {
    let dir = tempfile::tempdir().unwrap();
    let news = fixtures().join("news.csv");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = sentio(&["label", "--news", news.to_str().unwrap(), "--output", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("Date,Symbol,Label\n"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Date,Symbol,Text\nyesterday,AAA,hello\n").unwrap();
    let o = sentio(&["label", "--news", bad.to_str().unwrap(), "--output", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn training_log_has_one_row_per_update_phase() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(
        dir.path(),
        "c.cfg",
        "symbols = AAA\nppo.total_timesteps = 256\nppo.rollout_horizon = 128\nppo.hidden = 8\n",
    );
    assert!(sentio(&["--config", &cfg, "--out", out.to_str().unwrap(), "train"]).status.success());
    let log = std::fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 2);

    // re-running from the effective config reproduces the model
    let model = std::fs::read(out.join("model.txt")).unwrap();
    let effective = out.join("effective_config");
    let rerun = dir.path().join("rerun");
    let o = sentio(&["--config", effective.to_str().unwrap(), "--out", rerun.to_str().unwrap(), "train"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(model, std::fs::read(rerun.join("model.txt")).unwrap());
}

#[test]
fn compare_needs_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let o = sentio(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(a.to_str().unwrap()));
}

#[test]
fn identical_runs_compare_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "symbols = CCC\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert!(sentio(&["--config", &cfg, "--out", d.to_str().unwrap(), "baseline"]).status.success());
    }
    let out = dir.path().join("cmp");
    let o = sentio(&["--out", out.to_str().unwrap(), "compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("Run"));
    let csv = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows[0].split_once(',').unwrap().1, rows[1].split_once(',').unwrap().1);
}
