use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn remez(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_remez")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn triangle_gallery() {
    let v = json_of(&remez(&["gallery", "triangle", "--h", "0.5", "--emit", "json"]));
    assert_eq!(v["schema"], "remez-rigidity/1");
    let rows = v["result"]["rows"].as_array().unwrap();
    let lower = rows.iter().find(|r| r["quantity"] == "R_1 lower (LP)").unwrap();
    assert!(lower["measured"].as_f64().unwrap() >= 5.0 - 1e-9);
    assert!(rows.iter().any(|r| r["status"] == "flag" && r["expected"] == 4.0));
}

#[test]
fn measure_bound() {
    let v = json_of(&remez(&["remez", "measure-bound", "--lambda", "1", "--n", "2", "--d", "3"]));
    assert_eq!(v["result"]["chebyshev_bound"], 1.0);
    assert_eq!(v["result"]["simple_bound"], 512.0);
}

#[test]
fn exact_ellipse_is_verified() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("iso.svg");
    let jet = fixture("exact-ellipse.json");
    let out = remez(&["isotopy", "check", "--jet", jet.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    let v = json_of(&out);
    assert_eq!(v["result"]["status"], "Verified");
    assert_eq!(v["result"]["pairing"], serde_json::json!([[0, 0]]));
    let plot = std::fs::read_to_string(svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.contains("<polygon"));
}

#[test]
fn exit_codes() {
    assert_eq!(remez(&["gallery", "product-poly", "--zeta", "0"]).status.code(), Some(2));
    assert_eq!(remez(&["remez", "measure-bound", "--lambda", "0", "--n", "2", "--d", "3"]).status.code(), Some(2));
    assert_eq!(remez(&["gallery", "triangle", "--bogus"]).status.code(), Some(64));
    assert_eq!(remez(&["frobnicate"]).status.code(), Some(64));
    let missing = remez(&["isotopy", "check", "--jet", "/nonexistent/jet.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(remez(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_is_byte_stable() {
    let pts = fixture("triangle-points.json");
    let disks = fixture("four-disks.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["gallery", "product-poly", "--seed", "7"],
        vec!["gallery", "ellipse-rectangle", "--h", "0.2"],
        vec!["remez", "finite", "--points", pts.to_str().unwrap(), "--d", "1"],
        vec!["remez", "witness-test", "--domains", disks.to_str().unwrap(), "--d", "2", "--trials", "10"],
        vec!["rigidity", "interior", "--d", "3"],
        vec!["extrema", "bezout", "--roots", "-0.25,0.25"],
    ];
    for args in runs {
        let a = remez(&args);
        let b = remez(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        // emit -> parse -> emit
        let v = json_of(&a);
        let again = serde_json::to_string_pretty(&v).unwrap() + "\n";
        assert_eq!(again.as_bytes(), a.stdout.as_slice(), "{args:?}");
    }
}

#[test]
fn csv_tables() {
    let out = remez(&["gallery", "ellipse-rectangle", "--h", "0.1", "--emit", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "quantity,measured,expected,relation,tolerance,provenance,status,note");
    assert!(text.contains("R_2 witness lower"));
    let out = remez(&["rigidity", "points-1d", "--count", "1", "--d", "0", "--emit", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l == "result.lower,0.5"));
}

#[test]
fn different_seeds_change_random_choices() {
    let a = json_of(&remez(&["gallery", "product-poly", "--seed", "1"]));
    let b = json_of(&remez(&["gallery", "product-poly", "--seed", "2"]));
    assert_ne!(a["result"]["params"]["zeta"], b["result"]["params"]["zeta"]);
    assert_eq!(a["seed"], 1);
}

#[test]
fn subcommand_names() {
    let help = String::from_utf8(remez(&["rigidity", "--help"]).stdout).unwrap();
    for name in ["from-remez", "points-1d", "interior", "density", "whitney-1d"] {
        assert!(help.contains(name), "{name}");
    }
    let help = String::from_utf8(remez(&["remez", "--help"]).stdout).unwrap();
    for name in ["finite", "measure-bound", "topology-bound", "witness-test"] {
        assert!(help.contains(name), "{name}");
    }
}
