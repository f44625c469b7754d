use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn entangle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entangle"))
        .args(args)
        .env("ENTANGLE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn analyze_singlet() {
    let path = fixture("singlet.json");
    let out = entangle(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["ppt"]["verdict"], "npt");
    let beta = report["chsh"]["beta_lower_bound"].as_f64().unwrap();
    assert!((beta - 2.0 * 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(report["one_distillable"]["verdict"], "certified");
    assert_eq!(report["chain_consistent"], true);
    assert!(report["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert!(report.get("timings").is_none());
}

#[test]
fn analyze_maximally_mixed() {
    let path = fixture("maximally-mixed.json");
    let out = entangle(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["ppt"]["verdict"], "ppt");
    let beta = report["chsh"]["beta_lower_bound"].as_f64().unwrap();
    assert!((beta - 2.0).abs() < 1e-6);
    assert_eq!(report["one_distillable"]["verdict"], "inconclusive");
}

#[test]
fn explicit_algebras_match_the_tensor_form() {
    let a = entangle(&["analyze", fixture("singlet.json").to_str().unwrap(), "--format", "text"]);
    let b = entangle(&["analyze", fixture("singlet-algebras.json").to_str().unwrap(), "--format", "text"]);
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("input") && !l.starts_with("system")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn bad_density_is_an_input_error() {
    let out = entangle(&["analyze", fixture("bad-density.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trace"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"ambient_dim\": 4,\n  \"density\": oops\n}\n").unwrap();
    let out = entangle(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    let missing = entangle(&["analyze", "/nonexistent/input.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let flag = entangle(&["analyze", fixture("singlet.json").to_str().unwrap(), "--criteria", "bell"]);
    assert_eq!(flag.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let path = fixture("singlet.json");
    let args = ["analyze", path.to_str().unwrap(), "--seed", "5", "--full"];
    let a = entangle(&args);
    let b = entangle(&args);
    assert_eq!(a.stdout, b.stdout);
    let full: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(full["ppt"]["kernel"].as_array().unwrap().len(), 16);
    let timed = entangle(&["analyze", path.to_str().unwrap(), "--timings"]);
    let timed: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(timed["timings"]["ppt_ms"].as_f64().is_some());
}

#[test]
fn criteria_select_stages() {
    let out = entangle(&["analyze", fixture("singlet.json").to_str().unwrap(), "--criteria", "ppt"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.get("chsh").is_none());
    assert!(report.get("one_distillable").is_none());
    assert_eq!(report["ppt"]["verdict"], "npt");
}

#[test]
fn chain_table_and_errors() {
    let out = entangle(&["chain", "--sites", "4", "--fields", "1", "--regions", "1/2", "--states", "ground,0", "--criteria", "ppt", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].contains(" ppt "), "{text}");

    let overlap = entangle(&["chain", "--regions", "1,2/2"]);
    assert_eq!(overlap.status.code(), Some(2));

    let limited = entangle(&["chain", "--sites", "4,6", "--regions", "0/3", "--size-limit", "16", "--criteria", "ppt", "--format", "json"]);
    assert_eq!(limited.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = stdout(&limited).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["result"].is_object());
    assert_eq!(rows[1]["error"]["kind"], "size-limit");
}

#[test]
fn chain_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    std::fs::write(
        &path,
        r#"{"sites": [4], "fields": [0.5, 1.5], "boundary": "periodic", "regions": ["0/2"], "states": ["ground", 0]}"#,
    )
    .unwrap();
    let out = entangle(&["chain", "--config", path.to_str().unwrap(), "--criteria", "ppt", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r["index"].as_u64().unwrap()).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(rows[1]["state"], 0.0);
    assert_eq!(rows[1]["result"]["report"]["ppt"]["verdict"], "ppt");
}

#[test]
fn verify_is_deterministic_and_rejects_unknown_suites() {
    let a = entangle(&["verify", "separable-ppt", "--trials", "10", "--seed", "7"]);
    let b = entangle(&["verify", "separable-ppt", "--trials", "10", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("10/10"));
    let unknown = entangle(&["verify", "nonsense"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("unknown suite"));
    let listed = entangle(&["suites"]);
    assert!(stdout(&listed).contains("cyclic-distillation"));
}

#[test]
fn distill_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let out = entangle(&["distill", fixture("singlet.json").to_str().unwrap(), "--out", plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ok = entangle(&["replay", plan.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    doc["selector"][0][0][0] = serde_json::json!(7.0);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    let bad = entangle(&["replay", tampered.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL"));

    let mixed = entangle(&["distill", fixture("maximally-mixed.json").to_str().unwrap()]);
    assert_eq!(mixed.status.code(), Some(2));
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_entangle"))
        .args(["suites"])
        .env("ENTANGLE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
