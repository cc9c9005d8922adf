use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rca(args: &[&str], scenario: &str, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rca"));
    cmd.args(args).arg("--scenario").arg(fixture(scenario));
    match workers {
        Some(w) => cmd.env("RCA_WORKERS", w),
        None => cmd.env_remove("RCA_WORKERS"),
    };
    cmd.output().expect("spawn rca")
}

fn json_without_timing(out: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&out.stdout).expect("json output");
    v.as_object_mut().unwrap().remove("timing_ms").expect("timing_ms present");
    v
}

#[test]
fn passing_suite_exits_zero() {
    let out = rca(&["suite-all"], "f1.json", None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_without_timing(&out);
    assert_eq!(v["passed"], true);
    assert!(v["records"].as_array().unwrap().len() > 20);
}

#[test]
fn failing_checks_exit_one_with_witness() {
    for (cmd, file) in [
        ("verify-axioms", "broken_control.json"),
        ("extend", "nonlocal.json"),
        ("gexp", "concave_driver.json"),
    ] {
        let out = rca(&[cmd], file, None);
        assert_eq!(out.status.code(), Some(1), "{cmd} on {file}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains("FAIL "), "{stderr}");
        let v = json_without_timing(&out);
        assert_eq!(v["passed"], false);
        let failing = v["records"].as_array().unwrap().iter().find(|r| r["passed"] == false).unwrap();
        assert!(failing["witnesses"].as_array().is_some_and(|w| !w.is_empty()), "{failing}");
    }
}

#[test]
fn invalid_input_exits_two() {
    let out = rca(&["verify-axioms"], "bad_probs.json", None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("probabilities must sum to 1"));

    let out = rca(&["verify-axioms"], "bad_atom.json", None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("atom 7 of a 4-atom space"));

    let out = rca(&["verify-axioms"], "missing.json", None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_workers() {
    let base = json_without_timing(&rca(&["suite-all"], "f1.json", None));
    for w in ["1", "3"] {
        assert_eq!(json_without_timing(&rca(&["suite-all"], "f1.json", Some(w))), base, "RCA_WORKERS={w}");
    }
    let again = json_without_timing(&rca(&["suite-all", "--seed", "11"], "f1.json", None));
    assert_eq!(again, base);
}

#[test]
fn dual_rep_reproduces_entropic_values() {
    let v = json_without_timing(&rca(&["dual-rep"], "entropic.json", None));
    let value = v["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["name"] == "dual_rep.entropic(beta=1).x.value")
        .unwrap();
    let got: Vec<f64> = value["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let lo = ((-1f64).exp() + (-2f64).exp()).ln() - 2f64.ln();
    let hi = ((-3f64).exp() + (-4f64).exp()).ln() - 2f64.ln();
    for (g, e) in got.iter().zip([lo, lo, hi, hi]) {
        assert!((g - e).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn csv_has_fixed_header() {
    let out = rca(&["verify-axioms", "--format", "csv"], "broken_control.json", None);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check_id,atom,block,lhs,rhs,gap"));
    assert!(lines.next().is_some());
}
