//! End-to-end CLI tests: exit codes, golden outputs, determinism, and the
//! documented pipelines.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::tempdir;

fn keycast(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_keycast"));
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("spawn keycast");
    if let Some(text) = stdin {
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().expect("keycast terminates")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const FIG1B_GOLDEN: &str = r#"{"format":"keycast-instance/1","nodes":["s1","s2","d"],"edges":[{"id":"s1->d","tail":"s1","head":"d","capacity":{"num":1,"den":1}},{"id":"s2->d","tail":"s2","head":"d","capacity":{"num":1,"den":1}}],"sources":[{"node":"s1","role":"both"},{"node":"s2","role":"both"}],"terminals":["d"],"eavesdrop_sets":[{"edges":[],"observed_sources":["s1"]},{"edges":[],"observed_sources":["s2"]}]}
"#;

const FIG1B_CODE_GOLDEN: &str = r#"{"format":"keycast-code/1","blocklength":1,"input_order":"in_edges_by_id_then_source_bits","source_bits":{"s1":1,"s2":1},"edge_encoders":{"s1->d":{"type":"gf2","cols":1,"rows":["1"]},"s2->d":{"type":"gf2","cols":1,"rows":["1"]}},"decoders":{"d":{"type":"gf2","cols":2,"rows":["11"]}},"key":{"type":"gf2","cols":2,"rows":["11"]}}
"#;

#[test]
fn gen_outputs_are_pinned_byte_for_byte() {
    let fig = keycast(&["gen", "fig1b"], None);
    assert_eq!(exit_code(&fig), 0);
    assert_eq!(stdout_str(&fig), FIG1B_GOLDEN);
    let code = keycast(&["gen", "fig1b-code"], None);
    assert_eq!(stdout_str(&code), FIG1B_CODE_GOLDEN);
}

#[test]
fn gen_is_deterministic_across_runs() {
    let first = keycast(&["gen", "gap", "--alpha", "3", "--node-all"], None);
    let second = keycast(&["gen", "gap", "--alpha", "3", "--node-all"], None);
    assert_eq!(first.stdout, second.stdout);
    assert!(first.stderr.is_empty());
}

#[test]
fn check_pipeline_exit_codes_follow_verdicts() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let dir = tempdir().unwrap();
    let code_path = dir.path().join("sum.json");
    let sum = keycast(
        &["gen", "sum-code", "--alpha", "2", "--out", path_str(&code_path)],
        None,
    );
    assert_eq!(exit_code(&sum), 0);

    let pass = keycast(
        &["check", "-c", path_str(&code_path), "--mode", "key", "--rate", "1/1"],
        Some(&gap),
    );
    assert_eq!(exit_code(&pass), 0, "{}", stdout_str(&pass));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&pass)).unwrap();
    assert_eq!(report["format"], "keycast-report/1");
    assert_eq!(report["overall"], true);

    let fail = keycast(
        &["check", "-c", path_str(&code_path), "--mode", "key", "--rate", "2/1"],
        Some(&gap),
    );
    assert_eq!(exit_code(&fail), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&fail)).unwrap();
    assert_eq!(report["overall"], false);
    assert_eq!(report["verdicts"]["rate"]["ok"], false);
}

#[test]
fn check_reports_are_deterministic() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2", "--node-all"], None));
    let dir = tempdir().unwrap();
    let code_path = dir.path().join("sum.json");
    keycast(
        &["gen", "sum-code", "--alpha", "2", "--out", path_str(&code_path)],
        None,
    );
    let args = [
        "check",
        "-c",
        path_str(&code_path),
        "--mode",
        "key",
        "--rate",
        "1/1",
    ];
    let first = keycast(&args, Some(&gap));
    let second = keycast(&args, Some(&gap));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn mincut_prints_exact_rationals() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let cut = keycast(
        &["mincut", "--sources", "s2,s3", "--sink", "d1"],
        Some(&gap),
    );
    assert_eq!(exit_code(&cut), 0);
    assert_eq!(stdout_str(&cut), "1\n");
    let all = keycast(
        &["mincut", "--sources", "s1,s2,s3", "--sink", "d1"],
        Some(&gap),
    );
    assert_eq!(stdout_str(&all), "2\n");
}

#[test]
fn validate_flags_cycles_with_exit_one() {
    let bad = r#"{"format":"keycast-instance/1","nodes":["a","b"],"edges":[{"id":"e1","tail":"a","head":"b","capacity":{"num":1,"den":1}},{"id":"e2","tail":"b","head":"a","capacity":{"num":1,"den":1}}],"sources":[{"node":"a","role":"both"}],"terminals":["b"],"eavesdrop_sets":[]}"#;
    let out = keycast(&["validate"], Some(bad));
    assert_eq!(exit_code(&out), 1);
    assert!(stdout_str(&out).contains("ACYCLICITY"));
}

#[test]
fn usage_errors_exit_two() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let out = keycast(
        &["check", "-c", "/nonexistent.json", "--mode", "key", "--rate", "1"],
        Some(&gap),
    );
    assert_eq!(exit_code(&out), 2);
    let bad_mode = keycast(
        &["search", "--mode", "nope", "--shape", "n=1,l=1,forward,tables"],
        Some(&gap),
    );
    assert_eq!(exit_code(&bad_mode), 2);
}

#[test]
fn space_limits_exit_three() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let dir = tempdir().unwrap();
    let code_path = dir.path().join("sum.json");
    keycast(
        &["gen", "sum-code", "--alpha", "2", "--out", path_str(&code_path)],
        None,
    );
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_keycast"));
    cmd.args([
        "check",
        "-c",
        path_str(&code_path),
        "--mode",
        "key",
        "--rate",
        "1/1",
    ])
    .env("KEYCAST_ENUM_CAP", "2")
    .stdin(Stdio::piped())
    .stdout(Stdio::piped())
    .stderr(Stdio::piped());
    let mut child = cmd.spawn().unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(gap.as_bytes())
        .unwrap();
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SPACE_LIMIT"));
}

#[test]
fn search_emits_result_and_witness_file() {
    let dir = tempdir().unwrap();
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let witness_path = dir.path().join("witness.json");
    let out = keycast(
        &[
            "search",
            "--mode",
            "key",
            "--shape",
            "n=1,l=1,forward,linear",
            "--witness-out",
            path_str(&witness_path),
        ],
        Some(&gap),
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(result["format"], "keycast-search/1");
    assert_eq!(result["rate"], serde_json::json!({"num": 1, "den": 1}));
    assert_eq!(result["exhaustive"], true);
    assert_eq!(result["candidates_examined"], 512);
    // The witness file is a loadable code document.
    let witness_text = std::fs::read_to_string(&witness_path).unwrap();
    let witness: serde_json::Value = serde_json::from_str(&witness_text).unwrap();
    assert_eq!(witness["format"], "keycast-code/1");
}

#[test]
fn search_cursor_resumes_to_the_same_answer() {
    let dir = tempdir().unwrap();
    let gap_path = dir.path().join("gap.json");
    keycast(
        &["gen", "gap", "--alpha", "2", "--out", path_str(&gap_path)],
        None,
    );
    let cursor = dir.path().join("cursor.json");
    let full = keycast(
        &[
            "search",
            "-i",
            path_str(&gap_path),
            "--mode",
            "key",
            "--shape",
            "n=1,l=1,forward,linear",
        ],
        None,
    );
    let full_json: serde_json::Value = serde_json::from_str(&stdout_str(&full)).unwrap();

    let partial = keycast(
        &[
            "search",
            "-i",
            path_str(&gap_path),
            "--mode",
            "key",
            "--shape",
            "n=1,l=1,forward,linear",
            "--cursor",
            path_str(&cursor),
            "--chunk",
            "100",
        ],
        None,
    );
    assert_eq!(exit_code(&partial), 3, "unfinished run signals a resource stop");
    let resumed = keycast(
        &[
            "search",
            "-i",
            path_str(&gap_path),
            "--mode",
            "key",
            "--shape",
            "n=1,l=1,forward,linear",
            "--cursor",
            path_str(&cursor),
        ],
        None,
    );
    assert_eq!(exit_code(&resumed), 0);
    let resumed_json: serde_json::Value = serde_json::from_str(&stdout_str(&resumed)).unwrap();
    assert_eq!(resumed_json["rate"], full_json["rate"]);
    assert_eq!(resumed_json["witness"], full_json["witness"]);
    assert_eq!(resumed_json["best_candidate"], full_json["best_candidate"]);
}

#[test]
fn zero_columns_golden() {
    let out = keycast(
        &["transform", "zero-columns"],
        Some(r#"{"rows":["11"]}"#),
    );
    assert_eq!(exit_code(&out), 0);
    assert_eq!(
        stdout_str(&out),
        "{\"matrix\":{\"rows\":[\"10\"]},\"kept\":[0]}\n"
    );
}

#[test]
fn preencode_transform_round_trips_through_files() {
    let dir = tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    let code_path = dir.path().join("code.json");
    std::fs::write(
        &inst_path,
        r#"{"format":"keycast-instance/1","nodes":["s","d"],"edges":[{"id":"s->d","tail":"s","head":"d","capacity":{"num":2,"den":1}}],"sources":[{"node":"s","role":"both"}],"terminals":["d"],"eavesdrop_sets":[]}"#,
    )
    .unwrap();
    std::fs::write(
        &code_path,
        r#"{"format":"keycast-code/1","blocklength":1,"input_order":"in_edges_by_id_then_source_bits","source_bits":{"s":2},"edge_encoders":{"s->d":{"type":"gf2","cols":2,"rows":["10","01"]}},"decoders":{"d":{"type":"gf2","cols":2,"rows":["11"]}},"key":{"type":"gf2","cols":2,"rows":["11"]}}"#,
    )
    .unwrap();
    let perm_path = dir.path().join("perm.json");
    let out = keycast(
        &[
            "transform",
            "preencode",
            "-i",
            path_str(&inst_path),
            "-c",
            path_str(&code_path),
            "--perm-out",
            path_str(&perm_path),
        ],
        None,
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(&perm_path).unwrap(),
        "[0,3,1,2]\n"
    );
    let recoded: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(recoded["format"], "keycast-code/1");
    // The rewritten key map is the projection onto the leading bit.
    assert_eq!(
        recoded["key"],
        serde_json::json!({"type": "table", "out_bits": 1, "table": [0, 0, 1, 1]})
    );
}

#[test]
fn report_renders_human_lines() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let dir = tempdir().unwrap();
    let code_path = dir.path().join("sum.json");
    let report_path = dir.path().join("report.json");
    keycast(
        &["gen", "sum-code", "--alpha", "2", "--out", path_str(&code_path)],
        None,
    );
    keycast(
        &[
            "check",
            "-c",
            path_str(&code_path),
            "--mode",
            "key",
            "--rate",
            "1/1",
            "--out",
            path_str(&report_path),
        ],
        Some(&gap),
    );
    let out = keycast(&["report", "-i", path_str(&report_path)], None);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_str(&out);
    assert!(text.contains("overall:   PASS"));
    assert!(text.contains("secrecy:   PASS"));
}

#[test]
fn timestamps_only_appear_when_asked() {
    let gap = stdout_str(&keycast(&["gen", "gap", "--alpha", "2"], None));
    let dir = tempdir().unwrap();
    let code_path = dir.path().join("sum.json");
    keycast(
        &["gen", "sum-code", "--alpha", "2", "--out", path_str(&code_path)],
        None,
    );
    let plain = keycast(
        &["check", "-c", path_str(&code_path), "--mode", "key", "--rate", "1"],
        Some(&gap),
    );
    assert!(!stdout_str(&plain).contains("timestamp"));
    let stamped = keycast(
        &[
            "--timestamps",
            "check",
            "-c",
            path_str(&code_path),
            "--mode",
            "key",
            "--rate",
            "1",
        ],
        Some(&gap),
    );
    assert!(stdout_str(&stamped).contains("\"timestamp\":"));
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
