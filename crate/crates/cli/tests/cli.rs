use std::path::Path;
use std::process::{Command, Output};

use rsplab::io::FamilyFile;
use rsplab::protocol::{pauli_family, shift_family};
use serde_json::Value;

fn rsplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsplab"))
        .args(args)
        .env_remove("RSPLAB_SEED")
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_family(dir: &Path, name: &str, file: &FamilyFile) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(file).unwrap()).unwrap();
    format!("file:{}", path.display())
}

#[test]
fn demo_shift_d3() {
    let out = rsplab(&["demo-rsp", "--family", "shift", "--dim", "3", "--samples", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let records = lines(&out);
    assert_eq!(records.len(), 101);
    for r in &records[..100] {
        assert!(r["fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
        assert!((r["classical_cost"].as_f64().unwrap() - 9f64.log2()).abs() < 1e-12);
    }
    assert_eq!(records[100]["summary"]["passed"], true);
}

#[test]
fn demo_equatorial_costs_one_bit() {
    let out = rsplab(&["demo-rsp", "--family", "equatorial", "--dim", "2", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let records = lines(&out);
    assert_eq!(records.len(), 11);
    assert!(records[..10].iter().all(|r| r["classical_cost"] == 1.0));
}

#[test]
fn dim_one_is_a_config_error() {
    let out = rsplab(&["demo-rsp", "--dim", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--dim"));
}

#[test]
fn other_config_errors_exit_2() {
    for args in [
        &["scan", "--family", "nonsense"][..],
        &["scan", "--samples", "0"],
        &["scan", "--tol", "-1"],
        &["scan", "--family", "pauli", "--dim", "3"],
        &["scan", "--family", "shift", "--n", "5"],
        &["scan", "--dim", "3", "--sampler", "equatorial"],
        &["bloch-impossibility", "--dim", "3"],
        &["scan", "--family", "file:/nonexistent/family.json"],
    ] {
        let out = rsplab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn truncated_family_fails_property() {
    let out = rsplab(&["demo-rsp", "--family", "shift", "--n", "3", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let records = lines(&out);
    assert!(records[0]["error"].as_str().unwrap().contains("RSP-equation"));
}

#[test]
fn scan_shift_is_fully_feasible() {
    let out = rsplab(&["scan", "--family", "shift", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["feasible_fraction"], 1.0);
    assert_eq!(r["count"], 100);
}

#[test]
fn scan_file_pauli_triple_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = FamilyFile::from_protocol(&pauli_family().truncated(3).unwrap());
    file.probabilities = None;
    let fam = write_family(dir.path(), "triple.json", &file);
    let out = rsplab(&["scan", "--family", &fam, "--samples", "200", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &lines(&out)[0];
    assert_eq!(r["feasible_fraction"], 0.0);
    assert_eq!(r["n"], 3);
}

#[test]
fn malformed_family_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let good = FamilyFile::from_protocol(&shift_family(2).unwrap());

    let mut bad = good.clone();
    bad.unitaries[1].re[0] = 3.0;
    let fam = write_family(dir.path(), "nonunitary.json", &bad);
    let out = rsplab(&["scan", "--family", &fam]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unitaries[1]"), "{}", stderr(&out));

    let mut bad = good.clone();
    bad.n = 7;
    let fam = write_family(dir.path(), "count.json", &bad);
    let out = rsplab(&["scan", "--family", &fam]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("malformed n"), "{}", stderr(&out));

    let mut bad = good.clone();
    bad.probabilities = Some(vec![0.7, 0.7, -0.2, -0.2]);
    let fam = write_family(dir.path(), "probs.json", &bad);
    let out = rsplab(&["scan", "--family", &fam]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("probabilities"), "{}", stderr(&out));

    let path = dir.path().join("garbage.json");
    std::fs::write(&path, r#"{"d": 2, "n": 1}"#).unwrap();
    let out = rsplab(&["scan", "--family", &format!("file:{}", path.display())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unitaries"), "{}", stderr(&out));

    let mut bad = good;
    bad.d = 3;
    let fam = write_family(dir.path(), "shape.json", &bad);
    let out = rsplab(&["scan", "--family", &fam]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unitaries[0]"), "{}", stderr(&out));
}

#[test]
fn same_seed_is_byte_identical() {
    for sub in ["demo-rsp", "scan", "bounds", "bloch-impossibility", "equator-demo"] {
        let args = [sub, "--samples", "40", "--seed", "99"];
        let a = rsplab(&args);
        let b = rsplab(&args);
        assert!(a.status.success(), "{sub}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{sub}");
        assert!(!a.stdout.is_empty());
    }
    let c = rsplab(&["scan", "--samples", "40", "--seed", "100"]);
    assert_ne!(c.stdout, rsplab(&["scan", "--samples", "40", "--seed", "99"]).stdout);
}

#[test]
fn seed_from_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_rsplab"))
        .args(["scan", "--samples", "10"])
        .env("RSPLAB_SEED", "99")
        .output()
        .unwrap();
    let with_flag = rsplab(&["scan", "--samples", "10", "--seed", "99"]);
    assert_eq!(with_env.stdout, with_flag.stdout);
}

#[test]
fn bounds_shift_d2() {
    let out = rsplab(&["bounds", "--family", "shift", "--dim", "2", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &lines(&out)[0];
    assert_eq!(r["oblivious"]["is_identity"], true);
    let text = r["statements"].to_string();
    assert!(text.contains("n = d² = 4"), "{text}");
    assert!(text.contains("p_m = 1/4"), "{text}");
    assert_eq!(r["n3_check"]["infeasible"], 50);
    assert!(r["n3_check"]["max_det_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn bounds_pauli_triple() {
    let out = rsplab(&["bounds", "--family", "pauli", "--n", "3", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &lines(&out)[0];
    assert_eq!(r["oblivious"]["is_identity"], false);
    assert_eq!(r["family_scan"]["feasible_fraction"], 0.0);
}

#[test]
fn bounds_shift_d3_cost() {
    let out = rsplab(&["bounds", "--family", "shift", "--dim", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    let cost = r["oblivious"]["classical_cost_bits"].as_f64().unwrap();
    assert!((cost - 2.0 * 3f64.log2()).abs() < 1e-12);
    assert!(r["statements"].to_string().contains("3.1699"));
    assert!(r["n3_check"].is_null());
}

#[test]
fn bloch_impossibility_passes() {
    let out = rsplab(&["bloch-impossibility", "--samples", "500", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["infeasible"], 500);
    assert!(r["min_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn equator_demo_and_override() {
    let out = rsplab(&["equator-demo", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let records = lines(&out);
    assert_eq!(records.len(), 101);
    assert_eq!(records[100]["summary"]["classical_cost"], 1.0);
    assert_eq!(records[100]["summary"]["off_equator_rejected"], 100);

    // Haar states leave the equator
    let out = rsplab(&["equator-demo", "--samples", "5", "--sampler", "haar"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sub-ensemble"));
}

#[test]
fn csv_has_fixed_columns() {
    let out = rsplab(&["demo-rsp", "--samples", "3", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "sample,outcome,outcome_probability,fidelity,classical_cost,error");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 6));

    let out = rsplab(&["scan", "--samples", "3", "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,d,count,feasible_fraction,max_residual,min_residual,seed\n"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let out = rsplab(&["scan", "--samples", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let saved = std::fs::read(&path).unwrap();
    assert_eq!(saved, rsplab(&["scan", "--samples", "5"]).stdout);

    let out = rsplab(&["scan", "--out", "/nonexistent/dir/x.json"]);
    assert_eq!(out.status.code(), Some(2));
}
