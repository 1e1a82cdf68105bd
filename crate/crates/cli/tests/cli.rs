use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlattice")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_reports_equal() {
    let o = run(&["verify", "stanton_32", "--k", "2", "--r", "1", "--j", "1", "--prec", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("equal"));
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let o = run(&["verify", "stanton_32", "--k", "1", "--r", "1", "--j", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r + j ≤ k violated"));
    assert_eq!(run(&["verify", "no_such_row"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "stanton_32", "--prec", "0", "--k", "2", "--r", "1", "--j", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn json_prec_is_in_q_units() {
    let o = run(&["--format", "json", "verify", "rogers_ramanujan", "--a", "1", "--prec", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["prec"], 30);
    assert_eq!(v["equal"], true);
}

#[test]
fn trace_lambda_reproduces_the_worked_example() {
    let o = run(&["trace-lambda", "--input", r#"{"parts":[[3,1],[],[6,6,5,3],[19,0]]}"#]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().last().unwrap().contains("(4,0,0,3,0,1,2,1,1,2,1,2,0,3,1,0,0,1)"));
    assert!(out.contains("⇒ m=3"));
}

#[test]
fn trace_gamma_inverts() {
    let o = run(&["--format", "json", "trace-gamma", "--input", "[4,0,0,3,0,1,2,1,1,2,1,2,0,3,1,0,0,1]"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["result"], serde_json::json!({"parts": [[3, 1], [], [6, 6, 5, 3], [19, 0]]}));
}

#[test]
fn sweep_is_deterministic_and_complete() {
    let a = run(&["sweep", "--max-k", "2", "--prec", "20"]);
    let b = run(&["--jobs", "1", "sweep", "--max-k", "2", "--prec", "20"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("0 failed"));
}

#[test]
fn bailey_recipe_runs() {
    let recipe = r#"{"seed":{"kind":"dprime4","a":"q"},"steps":[{"tag":"BL_INF"},{"tag":"BL_RHO","rho":"-q"}],"prec":20}"#;
    let o = run(&["bailey", "--input", recipe]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("all verified"));
    assert_eq!(run(&["bailey", "--input", "{\"steps\": 3}"]).status.code(), Some(2));
}

#[test]
fn enumerate_and_interpret() {
    let o = run(&["--format", "json", "enumerate", "A", "--k", "2", "--max-weight", "0"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["members"], serde_json::json!([[], [1], [2]]));
    let o = run(&["interpret", "Z'", "--k", "3", "--r", "1", "--j", "1", "--prec", "15"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["interpret", "relation", "--k", "3", "--r", "1", "--j", "1", "--prec", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run(&["interpret", "relation", "--k", "3", "--r", "0", "--j", "1"]).status.code(), Some(2));
}
