use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latcoh")).args(args).env_remove("LATCOH_WORKERS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sigma237_latcoh_has_eu_one() {
    let out = run(&["latcoh", &fixture("graphs/sigma237.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["module"]["eu"], 1);
}

#[test]
fn sw_of_a2() {
    let out = run(&["sw", &fixture("graphs/a2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["sw"], "1/4");
    assert_eq!(v["eu"], 0);
}

#[test]
fn output_is_deterministic() {
    let args = ["latcoh", "--all-classes", &fixture("graphs/d4.json")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--workers", "1", "latcoh", "--all-classes", &fixture("graphs/d4.json")]);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn verify_passes_on_rational_data() {
    let out = run(&["verify", &fixture("graphs/a2.json"), "--data", &fixture("analytic/a2_rational.json"), "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_fails_on_cdp_violation() {
    let out = run(&["verify", &fixture("graphs/a2.json"), "--data", &fixture("analytic/cdp_violation.json"), "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(text.contains("FAIL cdp"), "{text}");
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"vertices":[],"edges":[]}"#).unwrap();
    let out = run(&["info", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = run(&["info", &fixture("graphs/not_negative_definite.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative definite"));

    let out = run(&["latcoh", "--class", "0,0", "--all-classes", &fixture("graphs/a2.json")]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["info", "--format", "dot", &fixture("graphs/a2.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_cap_exits_three() {
    let out = run(&["--cell-cap", "5", "latcoh", &fixture("graphs/e8.json")]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["reduce", &fixture("graphs/sigma237.json"), "--vbar", "a", "--cap", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["bad_set"]["verdict"], "undecided");
}

#[test]
fn root_renders_dot() {
    let out = run(&["root", "--format", "dot", &fixture("graphs/sigma237.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
}
