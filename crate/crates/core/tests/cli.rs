use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn nclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nclab")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn diag(values: &[f64]) -> Value {
    let n = values.len();
    let re: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect()).collect();
    json!({ "re": re, "im": vec![vec![0.0; n]; n] })
}

/// Two levels on four points; `dx_2 = diag(1, -1, 0, 0)` is a `(1, 2)` column
/// atom supported by `e = diag(1, 1, 0, 0)` at level 1.
fn classical_instance(atom: Value) -> Value {
    json!({
        "id": "classical",
        "dim": 4,
        "family": "CommutativePartition",
        "partitions": [[[0, 1], [2, 3]], [[0], [1], [2], [3]]],
        "diffs": [diag(&[0.0; 4]), diag(&[1.0, -1.0, 0.0, 0.0])],
        "atom": atom,
    })
}

#[test]
fn verify_passing_suite_exits_zero_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let out = nclab(&["verify", "--suite", "rev-triangle", "--trials", "2", "--seed", "3", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    for column in ["suite", "instance_id", "p", "q", "param_json", "lhs", "rhs", "margin", "pass"] {
        assert!(header.split(',').any(|c| c == column), "{header}");
    }
    // Four checks per case, two cases per family.
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rev-triangle"));
}

#[test]
fn failing_rows_exit_one_and_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = nclab(&["verify", "--suite", "theorem-main", "--family", "CommutativePartition", "--trials", "20", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let value = read_json(&report);
    let rows = value["rows"].as_array().unwrap();
    let failing: Vec<&Value> = rows.iter().filter(|r| r["pass"] == false).collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|r| r["param_json"].as_str().unwrap().contains("l1-estimate")));
    assert!(failing.iter().all(|r| r["p"].as_f64().unwrap() >= 1.0));

    let replay = nclab(&["replay", "--row", path(&report)]);
    assert_eq!(replay.status.code(), Some(0), "{}", String::from_utf8_lossy(&replay.stderr));
    let stdout = String::from_utf8_lossy(&replay.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("identical")).count(), failing.len());

    let single = dir.path().join("row.json");
    std::fs::write(&single, serde_json::to_string(failing[0]).unwrap()).unwrap();
    assert_eq!(nclab(&["replay", "--row", path(&single)]).status.code(), Some(0));
}

#[test]
fn unknown_suite_is_an_error() {
    let out = nclab(&["verify", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn decompose_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let atom = json!({
        "level": 1,
        "y": diag(&[1.0, -1.0, 1.0, -1.0]),
        "b": diag(&[1.0, 1.0, 0.0, 0.0]),
        "e": diag(&[1.0, 1.0, 0.0, 0.0]),
    });
    let input = dir.path().join("instance.json");
    std::fs::write(&input, classical_instance(atom).to_string()).unwrap();
    for (method, p) in [("algebraic", "0.5"), ("weak", "1"), ("crude", "1"), ("pinfty", "1")] {
        let out_path = dir.path().join(format!("{method}.json"));
        let out = nclab(&["decompose", "--input", path(&input), "--method", method, "--p", p, "--out", path(&out_path)]);
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let value = read_json(&out_path);
        assert_eq!(value["all_certificates_valid"], true, "{method}: {value}");
        assert!(value["bound_lhs"].as_f64().unwrap() <= value["bound_rhs"].as_f64().unwrap() + 1e-8, "{method}");
        assert!(!value["atoms"].as_array().unwrap().is_empty(), "{method}");
    }
    let out = nclab(&["decompose", "--input", path(&input), "--method", "crude", "--p", "1", "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_without_atom_fails_for_atom_methods() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("instance.json");
    let mut inst = classical_instance(Value::Null);
    inst.as_object_mut().unwrap().remove("atom");
    std::fs::write(&input, inst.to_string()).unwrap();
    let out = nclab(&["decompose", "--input", path(&input), "--method", "crude", "--p", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_and_norms_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("zeta.csv");
    let out = nclab(&["sweep", "--suite", "zeta", "--family", "BlockPinching", "--levels", "3", "--out", path(&sweep)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert!(text.starts_with("suite,instance_id,p,q,param_json,value\n"));
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(values.iter().all(|v| (v - 0.125).abs() < 1e-12), "{values:?}");

    let input = dir.path().join("instance.json");
    let mut inst = classical_instance(Value::Null);
    inst.as_object_mut().unwrap().remove("atom");
    std::fs::write(&input, inst.to_string()).unwrap();
    let out = nclab(&["norms", "--input", path(&input), "--kind", "h_c,Lp", "--p", "1,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("instance_id,kind,p,value,method"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    // ||dx_2||_1 = 1/2 and ||dx_2||_2 = h_2 = 1/sqrt(2).
    let value = |kind: &str, p: &str| rows.iter().find(|r| r[1] == kind && r[2] == p).unwrap()[3].parse::<f64>().unwrap();
    assert!((value("Lp", "1.0") - 0.5).abs() < 1e-15);
    assert!((value("Lp", "2.0") - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((value("h_c", "2.0") - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn suites_lists_the_registry() {
    let out = nclab(&["suites"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["theorem-main", "cuculescu-oracle", "reg-hardy", "pinfty"] {
        assert!(text.contains(name));
    }
}
