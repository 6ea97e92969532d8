use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn plan(name: &str) -> String {
    demo().join("plans").join(format!("{name}.toml")).display().to_string()
}

fn codeprompt(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_codeprompt"));
    for (key, _) in std::env::vars() {
        if key.starts_with("CODEPROMPT_") {
            cmd.env_remove(key);
        }
    }
    cmd.envs(env.iter().copied()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
fn assert_exit(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stdout:\n{}\nstderr:\n{}", stdout(out), stderr(out));
}

fn generate(name: &str, out: &Path) {
    let res = codeprompt(&["generate", "--config", &plan(name), "--out", out.to_str().unwrap()], &[]);
    assert_exit(&res, 0);
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_from_flags_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let corpus = demo().join("t2c.jsonl");
    let fixtures = demo().join("fixtures");
    let res = codeprompt(
        &[
            "generate",
            "--task",
            "t2c",
            "--variant",
            "behaviour",
            "--concise",
            "--session",
            "individual",
            "--backend",
            "replay",
            "--fixtures",
            fixtures.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[("CODEPROMPT_CORPUS", corpus.to_str().unwrap())],
    );
    assert_exit(&res, 0);
    for file in ["run.json", "report.md", "report.csv", "behaviours.json", "round-1/report.json", "round-1/instances.jsonl"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let manifest = read_json(out.join("run.json"));
    assert_eq!(manifest["instances"], 10);
    let config = manifest["config"].as_str().unwrap();
    assert!(config.contains("# corpus.t2c: env"), "{config}");
    assert!(config.contains("# variant.concise: flag"), "{config}");
    let pairs = std::fs::read_dir(out.join("round-1/pairs")).unwrap().count();
    assert_eq!(pairs, 20);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    let missing = tmp.path().join("nope").display().to_string();
    let task = plan("t2c-task");
    let cases: Vec<Vec<&str>> = vec![
        vec!["generate", "--config", &missing, "--out", out],
        vec!["generate", "--config", &task, "--task", "python", "--out", out],
        vec!["generate", "--config", &task, "--api-key", "x", "--out", out],
        vec!["frobnicate"],
    ];
    for args in cases {
        let res = codeprompt(&args, &[]);
        assert_exit(&res, 2);
    }
}

#[test]
fn replay_without_fixtures_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let corpus = demo().join("t2c.jsonl");
    let res = codeprompt(
        &["generate", "--task", "t2c", "--backend", "replay", "--out", out.to_str().unwrap()],
        &[("CODEPROMPT_CORPUS", corpus.to_str().unwrap())],
    );
    assert_exit(&res, 2);
    assert!(stderr(&res).contains("fixtures"), "{}", stderr(&res));
}

#[test]
fn unreadable_fixture_store_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no-fixtures");
    let out = tmp.path().join("o");
    let res = codeprompt(
        &[
            "generate",
            "--config",
            &plan("t2c-task"),
            "--fixtures",
            missing.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_exit(&res, 1);
}

#[test]
fn score_reproduces_embedded_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    generate("t2c-behaviour-C", &run);
    let scored = tmp.path().join("scored");
    let res = codeprompt(&["score", run.to_str().unwrap(), "--out", scored.to_str().unwrap()], &[]);
    assert_exit(&res, 0);
    let sets = read_json(scored.join("score.json"));
    let sets = sets.as_array().unwrap();
    assert_eq!(sets.len(), 5);
    for (i, set) in sets.iter().enumerate() {
        let embedded = read_json(run.join(format!("round-{}/report.json", i + 1)));
        assert_eq!(set["report"], embedded["report"], "round {}", i + 1);
    }
    assert!(scored.join("score.md").is_file() && scored.join("score.csv").is_file());
}

#[test]
fn bleu_only_weights_make_codebleu_equal_bleu() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    generate("t2c-behaviour", &run);
    let scored = tmp.path().join("scored");
    let res = codeprompt(
        &["score", run.join("round-1").to_str().unwrap(), "--weights", "1,0,0,0", "--out", scored.to_str().unwrap()],
        &[],
    );
    assert_exit(&res, 0);
    let sets = read_json(scored.join("score.json"));
    let report = &sets[0]["report"];
    let (bleu, codebleu) = (report["bleu"].as_f64().unwrap(), report["codebleu"].as_f64().unwrap());
    assert!((bleu - codebleu).abs() < 1e-9, "{bleu} vs {codebleu}");
}

#[test]
fn empty_pair_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let res = codeprompt(&["score", tmp.path().to_str().unwrap()], &[]);
    assert_exit(&res, 1);
}

#[test]
fn malformed_pair_dir_fails_and_names_offenders() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("a.candidate.java"), "int f(){return 1;}").unwrap();
    std::fs::write(tmp.path().join("a.reference.java"), "int f(){return 1;}").unwrap();
    std::fs::write(tmp.path().join("b.candidate.java"), "int g(){return 2;}").unwrap();
    let res = codeprompt(&["score", tmp.path().to_str().unwrap()], &[]);
    assert_exit(&res, 1);
    assert!(stderr(&res).contains("b: candidate without reference"), "{}", stderr(&res));
}

#[test]
fn report_compares_runs_and_summarizes_rounds() {
    let tmp = tempfile::tempdir().unwrap();
    let (task, best) = (tmp.path().join("task"), tmp.path().join("best"));
    generate("t2c-task", &task);
    generate("t2c-behaviour-C", &best);
    let out = tmp.path().join("report");
    let res = codeprompt(
        &["report", task.to_str().unwrap(), best.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[],
    );
    assert_exit(&res, 0);
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert_eq!(md, stdout(&res));
    assert!(md.contains("## Comparison"));
    let base_row = md.lines().find(|l| l.starts_with("| ChatGPT-task |")).expect("baseline row");
    assert!(!base_row.contains('%'), "{base_row}");
    let best_row = md.lines().find(|l| l.starts_with("| ChatGPT-behaviour-C |")).expect("best row");
    assert_eq!(best_row.matches('%').count(), 2, "{best_row}");
    assert!(md.contains("## Rounds: ChatGPT-behaviour-C"));
    for row in ["| R5 |", "| MIN |", "| MAX |", "| AVG |", "| STD |"] {
        assert!(md.contains(row), "{row} missing");
    }
    assert!(out.join("comparison.csv").is_file());
    assert!(out.join("rounds-ChatGPT-behaviour-C.csv").is_file());
}

#[test]
fn report_rejects_mixed_tasks() {
    let tmp = tempfile::tempdir().unwrap();
    let (t2c, c2c) = (tmp.path().join("t2c"), tmp.path().join("c2c"));
    generate("t2c-task", &t2c);
    generate("c2c-task", &c2c);
    let res = codeprompt(&["report", t2c.to_str().unwrap(), c2c.to_str().unwrap()], &[]);
    assert_exit(&res, 1);
}

#[test]
fn continuous_run_lists_skipped_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    generate("c2c-detail-S", &run);
    let manifest = read_json(run.join("run.json"));
    let skipped: Vec<u64> = manifest["skipped"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(skipped, [0, 0, 1, 0, 0]);
    assert!(run.join("round-3/skipped.json").is_file());
}

#[test]
fn import_concode_writes_canonical_records() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw.jsonl");
    std::fs::write(
        &raw,
        r#"{"nl": "returns the size concode_field_sep int count concode_elem_sep int[] items concode_field_sep int size concode_elem_sep void clear", "code": "int function ( ) { return count ; }"}"#,
    )
    .unwrap();
    let out = tmp.path().join("t2c.jsonl");
    let res = codeprompt(
        &["import-concode", raw.to_str().unwrap(), "--class-name", "Bag", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_exit(&res, 0);
    let line = std::fs::read_to_string(&out).unwrap();
    let record: Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(record["nl"], "returns the size");
    assert_eq!(record["class_name"], "Bag");
    assert_eq!(record["member_variables"], serde_json::json!(["int count", "int[] items"]));
    assert_eq!(record["member_functions"], serde_json::json!(["int size", "void clear"]));
}

#[test]
fn credential_never_reaches_artifacts() {
    const SECRET: &str = "sk-test-7f3a9c1e55d0";
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let res = codeprompt(
        &["-vv", "generate", "--config", &plan("t2c-behaviour"), "--out", out.to_str().unwrap()],
        &[("OPENAI_API_KEY", SECRET)],
    );
    assert_exit(&res, 0);
    assert!(!stdout(&res).contains(SECRET) && !stderr(&res).contains(SECRET));
    let mut stack = vec![out];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                assert!(!String::from_utf8_lossy(&bytes).contains(SECRET), "{} leaks", path.display());
            }
        }
    }
}
