//! End-to-end runs of the `mhs` binary: exit codes, output shapes and
//! byte-level determinism.

use std::process::{Command, Output};

use serde_json::Value;

fn mhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhs"))
        .args(args)
        .env("RAYON_NUM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    mhs(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> Value {
    let out = mhs(args);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"))
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["verify", "w4_1"]), 0);
    assert_eq!(code(&["verify", "abc_minimal"]), 0);
    // A wrong proportionality factor fails the Beltrami gate.
    assert_eq!(code(&["verify", "exp_x3", "--h", "z^2"]), 1);
    assert_eq!(code(&["symmetry", "cylindrical", "--expect", "1"]), 0);
    assert_eq!(code(&["symmetry", "w4_2", "--expect", "1"]), 1);
    assert_eq!(code(&["verify", "no_such_field"]), 2);
    assert_eq!(code(&["verify", "--field", "[sin(z), cos(z"]), 2);
    assert_eq!(code(&["orbit", "zsq_x3", "--gen", "rot-q"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["composite", "--eps", "1.5"]), 1);
}

#[test]
fn catalog_lists_every_entry() {
    let d = json(&["catalog", "--json"]);
    assert_eq!(d["schema"], "v1");
    assert_eq!(d["command"], "catalog");
    assert_eq!(d["beltrami"].as_array().unwrap().len(), 5);
    assert_eq!(d["pressure"].as_array().unwrap().len(), 4);
    let shown = json(&["catalog", "show", "zsq_x3", "--json"]);
    assert_eq!(shown["schema"], "v1");
    assert!(shown.to_string().contains("zsq_x3"));
}

#[test]
fn json_documents_carry_schema_and_verdict() {
    for args in [
        &["verify", "w4_3", "--json"][..],
        &["symmetry", "abc_minimal", "--json"],
        &["orbit", "zsq_x3", "--gen", "rot-z", "--n", "2", "--json"],
        &["gs", "--theta", "(x^2 + y^2)/2", "--chi", "2*T", "--w3", "1", "--json"],
        &["ggse", "--json"],
        &["characteristics", "w4_1", "--json"],
    ] {
        let d = json(args);
        assert_eq!(d["schema"], "v1", "{args:?}");
        assert_eq!(d["passed"], true, "{args:?}");
    }
    let s = json(&["symmetry", "abc_minimal", "--json"]);
    assert_eq!(s["null_dim"], 3);
    assert_eq!(json(&["symmetry", "w4_1", "--json"])["null_dim"], 0);
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        &["symmetry", "cylindrical", "--json"][..],
        &["verify", "w4_4", "--json"],
        &["orbit", "zsq_x3", "--gen", "trans-x", "--n", "3", "--json"],
    ] {
        let a = mhs(args).stdout;
        let b = Command::new(env!("CARGO_BIN_EXE_mhs"))
            .args(args)
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .unwrap()
            .stdout;
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn export_writes_a_full_grid() {
    let out = mhs(&["export", "exp_x3", "--grid", "8", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,z,wx,wy,wz");
    assert_eq!(lines.len(), 8 * 8 * 8 + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    let pressure = mhs(&["export", "w4_1", "--grid", "2", "--format", "csv"]);
    assert!(String::from_utf8(pressure.stdout)
        .unwrap()
        .starts_with("x,y,z,wx,wy,wz,chi\n"));
}

#[test]
fn csv_reports_have_a_header() {
    let out = mhs(&["verify", "w4_1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("subject,check,max,mean,rms,n_ok,n_failed,tolerance,passed\n"));
    assert!(text.lines().count() > 5);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = std::env::temp_dir().join(format!("mhs-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = mhs(&["verify", "cylindrical", "--json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let d: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(d["command"], "verify");
    std::fs::remove_dir_all(&dir).unwrap();
}
