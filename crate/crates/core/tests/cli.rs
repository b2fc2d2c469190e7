use std::process::Command;

use serde_json::Value;

fn shapefit(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_shapefit")).args(args).output().unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), report)
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn spline_fit_reports_penalty() {
    let (code, report) = shapefit(&["fit", "--input", &data("monotone.csv"), "--method", "spline"]);
    assert_eq!(code, 0);
    assert_eq!(report["schema_version"], 1);
    assert!(report["lambda"].as_f64().is_some_and(|l| l > 0.0), "{report}");
}

#[test]
fn row_order_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("monotone.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let shuffled = dir.path().join("reversed.csv");
    std::fs::write(&shuffled, format!("{header}\n{}\n", lines.join("\n"))).unwrap();
    let (a_code, a) = shapefit(&["fit", "--input", &data("monotone.csv"), "--method", "spline"]);
    let (b_code, b) = shapefit(&["fit", "--input", shuffled.to_str().unwrap(), "--method", "spline"]);
    assert_eq!((a_code, b_code), (0, 0));
    assert_eq!(a["lambda"], b["lambda"]);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,y\n0.1,1\n0.2,oops\n").unwrap();
    let (code, _) = shapefit(&["fit", "--input", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, _) = shapefit(&["kernel", "--ell", "2", "--points", "0"]);
    assert_ne!(code, 0);
}

#[test]
fn kernel_command_prints_moments() {
    let (code, report) = shapefit(&["kernel", "--ell", "1"]);
    assert_eq!(code, 0);
    assert_eq!(report["command"], "kernel");
}
