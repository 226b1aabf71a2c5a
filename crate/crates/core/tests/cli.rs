use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn paraf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paraf")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

#[test]
fn para_c_product_all_suites_pass() {
    let o = paraf(&["--structure", "para_c_product", "--param", "a=2", "--param", "n=1", "--param", "p=2", "--checks", "all", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["classification"]["class"], "weak_para_C");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["classification", "config", "results", "summary", "version"]);
}

#[test]
fn zero_a_is_a_construction_error() {
    let o = paraf(&["--structure", "para_c_product", "--param", "a=0", "--param", "n=1", "--param", "p=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank"));
    assert!(o.stdout.is_empty());
}

#[test]
fn para_sasakian_classifies_as_para_s() {
    let o = paraf(&["--structure", "para_sasakian_r3", "--checks", "classify", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("\"class\": \"para_S\""), "{text}");
}

#[test]
fn nonnormal_entry_passes_with_vacuous_theorems() {
    let o = paraf(&["--structure", "nonnormal_apc3", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["classification"]["class"], "metric_weak_para_f");
    assert_eq!(v["summary"]["theorems"]["vacuous"], 10);
}

#[test]
fn perturbed_structure_fails_checks() {
    let o = paraf(&["--structure", "para_sasakian_r3", "--param", "eps=0.1", "--samples", "5", "--checks", "axioms,classify"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["classification"]["class"], "unclassified");
}

#[test]
fn configuration_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["--structure", "para_sasakan_r3"],
        &["--structure", "para_sasakian_r3", "--checks", "axiom"],
        &["--structure", "para_sasakian_r3", "--tol", "A3=-1"],
        &["--structure", "para_sasakian_r3", "--derivatives", "symbolic"],
        &["--structure", "para_sasakian_r3", "--param", "b=1"],
        &["--samples", "3"],
    ];
    for args in cases {
        let o = paraf(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = paraf(&["--structure", "para_sasakan_r3"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean 'para_sasakian_r3'"));
}

#[test]
fn bundle_files_match_catalog() {
    let run = |args: &[&str]| {
        let mut v = json(&paraf(args));
        v.as_object_mut().unwrap().remove("config");
        v
    };
    let file = data("para_sasakian_r3.bundle");
    let from_file = run(&["--bundle", &file, "--samples", "8", "--checks", "axioms,tensors,classify"]);
    let from_catalog = run(&["--structure", "para_sasakian_r3", "--samples", "8", "--checks", "axioms,tensors,classify"]);
    assert_eq!(from_file, from_catalog);

    let file = data("para_c_product_p1.bundle");
    let from_file = run(&["--bundle", &file, "--samples", "8", "--checks", "axioms,tensors,classify"]);
    let from_catalog =
        run(&["--structure", "para_c_product", "--param", "p=1", "--samples", "8", "--checks", "axioms,tensors,classify"]);
    assert_eq!(from_file, from_catalog);
}

#[test]
fn malformed_bundle_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.bundle");
    std::fs::write(&p, "[chart]\ncoordinates = x y z\n[metric]\nx x = (1 +\n").unwrap();
    let o = paraf(&["--bundle", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_path_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.md");
    let o = paraf(&["--structure", "para_sasakian_r3", "--samples", "5", "--format", "markdown", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let md = std::fs::read_to_string(&p).unwrap();
    assert!(md.contains("## Classification: `para_S`"));
    assert!(md.contains("| A3.f3_fQ | PASS |"));
    assert!(md.contains("### rigidity (PASS)"));
}

#[test]
fn fd_strategy_uses_loose_tolerances() {
    let o = paraf(&["--structure", "para_sasakian_r3", "--samples", "5", "--derivatives", "fd"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o)["classification"]["class"], "para_S");
}
