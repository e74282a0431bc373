//! End-to-end runs of the `superforms` executable.

use std::io::Write;
use std::process::{Command, Output};

fn superforms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superforms"))
        .args(args)
        .output()
        .unwrap()
}

fn script(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".sf").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn prints_elementary_bracket() {
    let f = script("chart M even x, p;\nsymplectic even;\nprint poisson(p, x);\n");
    let o = superforms(&["--script", f.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1\n");
}

#[test]
fn differential_of_exact_form_is_zero() {
    let f = script("chart M even x odd theta;\nprint d(x*dx);\nprint d(d(x^2*theta));\n");
    let o = superforms(&["--script", f.path().to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "{\"line\":2,\"expr\":\"d(x*dx)\",\"value\":{\"terms\":[]}}\n\
         {\"line\":3,\"expr\":\"d(d(x^2*theta))\",\"value\":{\"terms\":[]}}\n"
    );
}

#[test]
fn parse_errors_report_position_and_fail() {
    let f = script("chart M even x odd xi1;\nlet f = xi1 +");
    let o = superforms(&["--script", f.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains(":2:14:"), "{err}");
    assert!(err.contains("expected"), "{err}");
}

#[test]
fn evaluation_errors_keep_earlier_output() {
    let f = script("chart M even x;\nprint x^2;\nprint x/0;\n");
    let o = superforms(&["--script", f.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert_eq!(stdout(&o), "1*x^2\n");
    assert!(String::from_utf8(o.stderr).unwrap().contains(":3:"));
}

#[test]
fn unknown_suite_fails() {
    let o = superforms(&["--check", "nope"]);
    assert!(!o.status.success());
}

#[test]
fn suite_output_is_deterministic() {
    let a = superforms(&["--check", "cartan-table", "--seed", "5", "--format", "json"]);
    let b = superforms(&["--check", "cartan-table", "--seed", "5", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = superforms(&["--check", "cartan-table", "--seed", "6", "--format", "json"]);
    assert!(c.status.success());
}

#[test]
fn order_flag_truncates_flows() {
    let f = script("chart M even x, p;\nsymplectic even;\nprint evolve(x; (p^2 + x^2)/2);\n");
    let o = superforms(&["--script", f.path().to_str().unwrap(), "--order", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "-1/2*x*t^2 + 1*p*t + 1*x\n");
}
