//! End-to-end checks of the binary: exit codes, output formats, determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beta-moments"))
        .args(args)
        .output()
        .expect("spawn beta-moments")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn json_report_shape_and_value() {
    let out = run(&["limits", "second-moment", "--beta", "2", "--tau", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("json output");
    assert_eq!(doc["spec"]["command"], "limits second-moment");
    assert_eq!(doc["spec"]["params"]["beta"], 2.0);
    assert!(doc["spec"]["version"].is_string());
    assert!(doc["diagnostics"].is_object());
    let v = doc["result"]["second_moment"].as_f64().unwrap();
    assert!((v - 2.0 / (5.0 * 14.0)).abs() < 1e-15);
}

#[test]
fn csv_report_header_and_precision() {
    let out = run(&[
        "--format", "csv", "limits", "x-moment", "--beta", "2", "--tau", "3", "--h", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();

    let banner = lines.next().unwrap();
    let rest = banner.strip_prefix("# beta-moments ").expect("csv banner");
    let (_version, spec_json) = rest.split_once(' ').expect("version then spec");
    let spec: serde_json::Value = serde_json::from_str(spec_json).expect("spec json in banner");
    assert_eq!(spec["command"], "limits x-moment");

    assert_eq!(lines.next().unwrap(), "x_moment");
    let cell = lines.next().unwrap();
    // 17 significant digits in scientific notation.
    assert!(cell.contains('e') && cell.splitn(2, 'e').next().unwrap().len() >= 18);
    let v: f64 = cell.parse().unwrap();
    assert!((v - 1.0 / 35.0).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_2() {
    // Unknown flag (clap-level).
    let out = run(&["limits", "second-moment", "--beta", "2", "--tau", "3", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing required argument (clap-level).
    let out = run(&["limits", "second-moment", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(2));
    // Structurally invalid value (library-level).
    let out = run(&["limits", "second-moment", "--beta", "-1", "--tau", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3() {
    // tau below the integrability window for h = 1.
    let out = run(&["limits", "x-moment", "--beta", "2", "--tau", "0.25", "--h", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tau"), "stderr should explain the domain failure: {err}");
}

#[test]
fn sampling_is_deterministic_given_seed() {
    let args = [
        "sample", "laguerre", "--beta", "2", "--n", "4", "--nu", "1.5",
        "--count", "5", "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));

    let mut other = args;
    other[other.len() - 1] = "8";
    let c = run(&other);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join("bm_cli_output_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f0.json");
    let out = run(&[
        "--output",
        path.to_str().unwrap(),
        "limits",
        "f0",
        "--beta",
        "2",
        "--s",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let v = doc["result"]["f0"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-10);
}

#[test]
fn verify_identities_passes() {
    let out = run(&["verify", "identities"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("PASS"), "expected PASS lines, got: {text}");
    assert!(!text.contains("FAIL"));
}
