//! End-to-end runs of the `fragcheck` binary.

mod common;

use std::path::Path;
use std::process::Command;

use common::specs_dir;
use serde_json::{json, Value as Json};

struct Out {
    code: i32,
    report: Json,
    stdout: String,
}

fn run(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_fragcheck")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    Out { code: out.status.code().unwrap(), report: serde_json::from_str(&stdout).unwrap_or(Json::Null), stdout }
}

fn spec(name: &str) -> String {
    specs_dir().join(name).display().to_string()
}

fn write_spec(dir: &Path, name: &str, v: &Json) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn purchase() -> Json {
    serde_json::from_str(&std::fs::read_to_string(spec("purchase.json")).unwrap()).unwrap()
}

#[test]
fn typecheck_example_passes() {
    let o = run(&["typecheck", &spec("purchase.json")]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert_eq!(o.report["verdict"], "pass");
}

#[test]
fn typecheck_reports_the_bad_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = purchase();
    p["database"]["status"]["paid"] = json!(3);
    let o = run(&["typecheck", &write_spec(dir.path(), "bad.json", &p)]);
    assert_eq!(o.code, 1);
    assert_eq!(o.report["errors"][0]["pointer"], "/database/status/paid");
}

#[test]
fn two_initial_nodes_are_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = purchase();
    p["fragments"][0]["nodes"][1]["labels"] = json!(["init"]);
    let o = run(&["typecheck", &write_spec(dir.path(), "two.json", &p)]);
    assert_eq!(o.code, 3, "{}", o.stdout);
    assert_eq!(o.report["verdict"], "error");
}

#[test]
fn simulate_without_steps_gives_the_start() {
    let o = run(&["simulate", &spec("decrement.json"), "--max-steps", "0"]);
    assert_eq!(o.code, 0);
    let runs = o.report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0]["nodes"], json!(["a"]));
    assert_eq!(runs[0]["databases"], json!([{ "x": 2 }]));
}

#[test]
fn simulate_marks_stuck_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut p: Json = serde_json::from_str(&std::fs::read_to_string(spec("decrement.json")).unwrap()).unwrap();
    p["fragments"][0]["edges"][0]["guard"] = json!("false");
    let o = run(&["simulate", &write_spec(dir.path(), "stuck.json", &p), "--max-steps", "4"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.report["runs"][0]["note"], "stuck");
    assert_eq!(o.report["runs"][0]["edges"], json!([]));
}

#[test]
fn check_exit_codes_and_engines() {
    let cases = [
        ("decrement.json", "A G db.x >= 0", 0, "holds"),
        ("decrement.json", "E F db.x < 0", 1, "fails"),
        ("decrement.json", "A F db.x = 0", 0, "holds"),
        ("purchase.json", "~(E F db.status.final = true)", 1, "fails"),
    ];
    for (file, q, code, verdict) in cases {
        for extra in [None, Some("--oracle")] {
            let mut args = vec!["check", &spec(file), "-q", q].into_iter().map(String::from).collect::<Vec<_>>();
            args.extend(extra.map(String::from));
            let o = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
            assert_eq!((o.code, o.report["verdict"].as_str()), (code, Some(verdict)), "{file} {q} {extra:?}: {}", o.stdout);
        }
    }
}

#[test]
fn verify_decrement() {
    let o = run(&["verify", &spec("decrement.json"), "-q", "A G db.x >= 0", "--depth", "1", "--backend", "ground"]);
    assert_eq!(o.code, 1, "{}", o.stdout);
    assert_eq!(o.report["initial_condition"], json!(["x(db0) < 0"]));
    let o = run(&["verify", &spec("decrement_nonneg.json"), "-q", "A G db.x >= 0", "--depth", "2", "--backend", "ground"]);
    assert_eq!(o.code, 0, "{}", o.stdout);
}

#[test]
fn verify_emit_only_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = run(&["verify", &spec("decrement.json"), "-q", "A G db.x >= 0", "--depth", "1", "--emit-tptp", &out]);
    assert_eq!(o.code, 2, "{}", o.stdout);
    assert_eq!(o.report["obligation_count"], 3);
    assert!(dir.path().join("decrement_0_0.p").exists());
}

#[test]
fn emit_axioms_lists_update_axioms() {
    let o = run(&["emit-axioms", &spec("purchase.json")]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("upd_paid_paid"), "{}", o.stdout);

    let dir = tempfile::tempdir().unwrap();
    let empty = json!({ "types": "DB = { }", "fragments": [{ "name": "F", "nodes": [{ "id": "a", "labels": ["init"] }], "edges": [] }] });
    let o = run(&["emit-axioms", &write_spec(dir.path(), "empty.json", &empty)]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    assert!(!o.stdout.contains("upd_"), "{}", o.stdout);
}

#[test]
fn bad_arguments_give_a_json_error() {
    let o = run(&["check", &spec("decrement.json"), "--bogus"]);
    assert_eq!(o.code, 3);
    assert_eq!(o.report["verdict"], "error");
    let o = run(&["check", &spec("decrement.json"), "-q", "A G (db.x >"]);
    assert_eq!(o.code, 3);
    assert_eq!(o.report["error"]["pointer"], "query");
}
