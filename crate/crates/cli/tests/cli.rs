use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn panda(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_panda"));
    c.args(args).current_dir(repo()).env_remove("PANDA_RUNS_DIR");
    c
}

fn ok(args: &[&str]) -> String {
    let out = panda(args).output().unwrap();
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> Output {
    let out = panda(args).output().unwrap();
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    out
}

#[test]
fn version_and_help() {
    let v = ok(&["--version"]);
    assert!(v.starts_with("panda ") && v.contains("build"), "{v}");
    for cmd in ["validate", "train", "serve", "analyze", "replay", "play", "annotate"] {
        ok(&[cmd, "--help"]);
    }
    for sub in ["criteria", "stats", "trajectory", "alignment", "concordance", "correlation", "walkthrough"] {
        ok(&["analyze", sub, "--help"]);
    }
    fails(&["validate", "worlds/cellar.world.json", "--frobnicate"]);
    fails(&["dance"]);
}

#[test]
fn validate_worlds_and_lexicon() {
    let out = ok(&["validate", "worlds/cellar.world.json", "lexicon/default.lexicon.json"]);
    assert!(out.contains("15 places"));
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.world.json");
    std::fs::write(&bad, r#"{"id": "x", "places": []}"#).unwrap();
    let out = fails(&["validate", bad.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn criteria_and_stats_on_fixture() {
    let out = ok(&["analyze", "criteria", "--matrix", "fixtures/reference_scores.csv"]);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].split_whitespace().eq([
        "NP", "Ope_up", "Ope_down", "Con_up", "Con_down", "Ext_up", "Ext_down", "Agr_up", "Agr_down", "Neu_up",
        "Neu_down", "Psy_up", "Psy_down", "Mac_up", "Mac_down", "Nar_up", "Nar_down"
    ]));
    let avg: Vec<&str> = lines[1].split_whitespace().collect();
    let cnt: Vec<&str> = lines[2].split_whitespace().collect();
    let diff: Vec<&str> = lines[3].split_whitespace().collect();
    assert_eq!((avg[0], avg[2]), ("Avg.", "6.52"));
    assert_eq!((cnt[0], cnt[2]), ("Cnt.", "11"));
    assert_eq!((diff[0], diff[2]), ("Diff.", "+2.08"));

    let json = ok(&["analyze", "criteria", "--matrix", "fixtures/reference_scores.csv", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["traits"]["Ope"]["cnt"], 11);

    let out = ok(&["analyze", "stats", "--matrix", "fixtures/reference_scores.csv", "--trait", "Ope"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(row[0], "Ope");
    assert!(row[1].parse::<f64>().unwrap() <= 2.0);
    assert!(row[2].parse::<f64>().unwrap() < 0.01);

    fails(&["analyze", "criteria", "--matrix", "no/such.csv"]);
}

#[test]
fn train_replay_and_run_analyses() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("runs");
    let train = |root: &Path, agent: &str| {
        let out = panda(&["train", "--world", "cellar", "--agent", agent, "--seed", "1", "--steps", "800"])
            .env("PANDA_RUNS_DIR", root)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    train(&root, "Ope_up");
    train(&root, "NP");
    let run = root.join("cellar/Ope_up/1");
    assert!(run.join("runlog.json").is_file() && run.join("checkpoint.bin").is_file());

    // same seed, same bytes
    let again = tmp.path().join("again");
    train(&again, "Ope_up");
    let read = |p: PathBuf| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(run.join("runlog.json")), read(again.join("cellar/Ope_up/1/runlog.json")));
    assert_eq!(read(run.join("episodes/00000.jsonl")), read(again.join("cellar/Ope_up/1/episodes/00000.jsonl")));

    let r = root.to_str().unwrap();
    let out = ok(&["replay", run.to_str().unwrap(), "--episode", "0"]);
    assert!(out.contains("final score"));

    let out = ok(&["analyze", "trajectory", "--world", "cellar", "--runs", r, "--threshold", "2"]);
    assert!(out.lines().any(|l| l.starts_with("Ope_up")) && out.lines().any(|l| l.starts_with("NP")));
    fails(&["analyze", "trajectory", "--world", "cellar", "--runs", r]);

    let out = ok(&["analyze", "alignment", "--world", "cellar", "--runs", r, "--window", "init50", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.get("Ope_up").is_some());
    fails(&["analyze", "alignment", "--world", "cellar", "--runs", r, "--window", "mid50"]);

    let ep = run.join("episodes/00000.jsonl");
    let out = ok(&["analyze", "concordance", "--reference", ep.to_str().unwrap(), "--run", run.to_str().unwrap()]);
    assert!(out.starts_with("concordance "));
}

#[test]
fn play_annotate_and_concordance() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("human.jsonl");
    let mut child = panda(&["play", "--world", "cellar", "--seed", "2", "--out", traj.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1\n2\n99\nx\n1\n3\nq\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("enter a number"));
    assert!(text.contains("after 4 steps"));

    let t = traj.to_str().unwrap();
    let jsonl = std::fs::read_to_string(&traj).unwrap();
    assert_eq!(jsonl.lines().count(), 4);
    assert!(jsonl.contains("\"source\":\"human\""));

    let out = ok(&["analyze", "concordance", "--reference", t, "--other", t, "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["concordance"], 100.0);

    let annotated = tmp.path().join("annotated.jsonl");
    ok(&["annotate", t, "--out", annotated.to_str().unwrap()]);
    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(&annotated).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first["valences"].as_object().unwrap().len(), 8);

    let out = ok(&["analyze", "correlation", "--trajectory", t]);
    assert!(out.starts_with("4 actions"));
}

#[test]
fn walkthrough_and_correlation_on_world() {
    let out = ok(&["analyze", "walkthrough", "--world", "cellar", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["actions"], 30);
    for (_, s) in v["shares"].as_object().unwrap() {
        assert!(s["high"].as_f64().unwrap() + s["low"].as_f64().unwrap() <= 100.0);
    }
    let out = ok(&["analyze", "correlation", "--world", "cellar"]);
    assert!(out.lines().nth(2).unwrap().starts_with("Ope"));
    fails(&["analyze", "walkthrough", "--world", "atlantis"]);
    fails(&["analyze", "walkthrough", "--world", "cellar", "--oracle", "gpt:4"]);
}

#[test]
fn train_all_writes_score_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_str().unwrap();
    ok(&["train", "--world", "house", "--all", "--seed", "1,2", "--steps", "200", "--out", root, "--jobs", "2"]);
    let csv = std::fs::read_to_string(tmp.path().join("house/scores.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 18);
    assert_eq!(csv.lines().count(), 2);
    let out = ok(&["analyze", "criteria", "--runs", root]);
    assert!(out.lines().nth(2).unwrap().starts_with("Cnt."));
    fails(&["train", "--world", "house", "--all", "--agent", "NP"]);
}
