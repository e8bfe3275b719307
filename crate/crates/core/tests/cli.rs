use std::path::{Path, PathBuf};
use std::process::Command;

use commsq::hadamard::petrescu_angle;
use commsq::io::MatrixFile;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn commsq(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_commsq")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let r = commsq(args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let p = dir.join(name);
    std::fs::write(&p, r.stdout).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(r: &Run) -> serde_json::Value {
    serde_json::from_str(&r.stdout).unwrap()
}

#[test]
fn gen_kinds() {
    let r = commsq(&["gen", "fourier", "--n", "7"]);
    assert_eq!(r.code, 0);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("CART 7"));
    assert!(lines.next().unwrap().starts_with("0.3779644730092272,0 "));

    let r = commsq(&["gen", "petrescu", "--lambda-angle", "0"]);
    let m = MatrixFile::<f64>::parse(&r.stdout).unwrap().matrix();
    assert!((&m - &petrescu_angle(0.0)).max_abs() < 1e-15);

    let r = commsq(&["gen", "qr-circulant", "--n", "7", "--format", "phase"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("PHASE 7\n"));
    assert_eq!(commsq(&["gen", "qr-circulant", "--n", "9"]).code, 2);

    let r = commsq(&["gen", "fourier", "--n", "0"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("order must be ≥ 1"));
}

#[test]
fn gen_circulant_from_row_file() {
    let dir = TempDir::new().unwrap();
    let row = dir.path().join("row.txt");
    std::fs::write(&row, "# 2x2 Hadamard row\n0.7071067811865475,0 -0.7071067811865475,0\n").unwrap();
    let f = gen_to(dir.path(), "c.txt", &["gen", "circulant", "--row", s(&row)]);
    assert_eq!(commsq(&["verify", s(&f)]).code, 1);
    assert_eq!(commsq(&["gen", "circulant"]).code, 2);
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let b = gen_to(dir.path(), "b.txt", &["gen", "bjorck7"]);
    let r = commsq(&["verify", s(&b)]);
    assert_eq!(r.code, 0);
    assert_eq!(json(&r)["is_biunitary"], true);

    let id = dir.path().join("id.txt");
    std::fs::write(&id, "CART 2\n1,0 0,0\n0,0 1,0\n").unwrap();
    assert_eq!(commsq(&["verify", s(&id)]).code, 1);

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "CART 2\n1,0 0,0\n").unwrap();
    assert_eq!(commsq(&["verify", s(&bad)]).code, 2);
    assert_eq!(commsq(&["verify", s(&dir.path().join("missing.txt"))]).code, 2);
}

#[test]
fn certify_verdicts() {
    let dir = TempDir::new().unwrap();
    let f7 = gen_to(dir.path(), "f7.txt", &["gen", "fourier", "--n", "7", "--format", "phase"]);
    let r = commsq(&["certify", s(&f7)]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("{\"n\":7,\"rank\":36,\"expected\":36,\"verdict\":\"Isolated\",\"gap\":"));
    assert!(r.stdout.contains("\"policy\":{\"tol_entry\":1e-9,\"tol_unitary\":1e-9,\"rank_rel_cut\":1e-8,"));

    let f6 = gen_to(dir.path(), "f6.txt", &["gen", "fourier", "--n", "6"]);
    let r = commsq(&["certify", s(&f6)]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "SpanFails");

    let r = commsq(&["certify", s(&f6), "--rank-cut", "0.5"]);
    assert_eq!(r.code, 1);
    assert_ne!(json(&r)["verdict"], "Isolated");
    assert_eq!(json(&r)["policy"]["rank_rel_cut"], 0.5);

    assert_eq!(commsq(&["certify", s(&f6), "--rank-cut", "-1"]).code, 2);
    let id = dir.path().join("id.txt");
    std::fs::write(&id, "CART 2\n1,0 0,0\n0,0 1,0\n").unwrap();
    assert_eq!(commsq(&["certify", s(&id)]).code, 2);
}

#[test]
fn pairs_modes() {
    let dir = TempDir::new().unwrap();
    let pet = gen_to(dir.path(), "pet.txt", &["gen", "petrescu"]);
    let r = commsq(&["pairs", s(&pet), "--mode", "block"]);
    assert_eq!(r.code, 0);
    let list = json(&r);
    assert!(list.as_array().unwrap().iter().any(|e| e["p1"] == serde_json::json!([0, 1])
        && e["p2"] == serde_json::json!([2, 3])
        && e["d1"] == serde_json::json!([0, 1])
        && e["d2"] == serde_json::json!([2, 3])));
    assert!(r.stdout.starts_with("[{\"theorem\":\"constr2\",\"n\":7,\"base\":"));

    let f5 = gen_to(dir.path(), "f5.txt", &["gen", "fourier", "--n", "5"]);
    let r = commsq(&["pairs", s(&f5), "--mode", "commuting"]);
    assert_eq!((r.code, r.stdout.trim()), (1, "[]"));

    let f16 = gen_to(dir.path(), "f16.txt", &["gen", "fourier", "--n", "16"]);
    let r = commsq(&["pairs", s(&f16)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("exceeds the limit"));
}

#[test]
fn family_members() {
    let dir = TempDir::new().unwrap();
    let pet = gen_to(dir.path(), "pet.txt", &["gen", "petrescu"]);
    let r = commsq(&["pairs", s(&pet), "--mode", "block"]);
    let list = json(&r);
    let spec = list
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["p1"] == serde_json::json!([0, 1]) && e["d2"] == serde_json::json!([2, 3]))
        .unwrap()
        .clone();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, spec.to_string()).unwrap();

    let zero = commsq(&["family", s(&pet), "--spec", s(&spec_path), "--param", "0"]);
    assert_eq!(zero.code, 0);
    assert_eq!(zero.stdout, std::fs::read_to_string(&pet).unwrap());

    let third = std::f64::consts::FRAC_PI_3.to_string();
    let member = commsq(&["family", s(&pet), "--spec", s(&spec_path), "--param", &third]);
    let target = commsq(&["gen", "petrescu", "--lambda-angle", &third]);
    let a = MatrixFile::<f64>::parse(&member.stdout).unwrap().matrix();
    let b = MatrixFile::<f64>::parse(&target.stdout).unwrap().matrix();
    assert!((&a - &b).max_abs() < 1e-12);
    let mpath = dir.path().join("member.txt");
    std::fs::write(&mpath, &member.stdout).unwrap();
    assert_eq!(commsq(&["verify", s(&mpath)]).code, 0);

    let neg = commsq(&["family", s(&pet), "--spec", s(&spec_path), "--param", "-1.3"]);
    assert_eq!(neg.code, 0);

    // same masks on a matrix where they are not a witness
    let f7 = gen_to(dir.path(), "f7.txt", &["gen", "fourier", "--n", "7"]);
    let r = commsq(&["family", s(&f7), "--spec", s(&spec_path), "--param", "0.5"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("not certified"));

    let f4 = gen_to(dir.path(), "f4.txt", &["gen", "fourier", "--n", "4"]);
    let r = commsq(&["pairs", s(&f4), "--mode", "commuting"]);
    let c1 = json(&r)[0].clone();
    assert_eq!(c1["theorem"], "constr1");
    let c1_path = dir.path().join("c1.json");
    std::fs::write(&c1_path, c1.to_string()).unwrap();
    let r = commsq(&["family", s(&f4), "--spec", s(&c1_path), "--param", "0.8"]);
    let p = dir.path().join("f4t.txt");
    std::fs::write(&p, r.stdout).unwrap();
    assert_eq!(commsq(&["verify", s(&p)]).code, 0);
}

#[test]
fn search_runs() {
    let dir = TempDir::new().unwrap();
    let pet = gen_to(dir.path(), "pet.txt", &["gen", "petrescu", "--format", "phase"]);
    let args = ["search", "--init", s(&pet), "--masks", "0,1/2,3/0,1/2,3", "--noise", "1e-3", "--seed", "2"];
    let r = commsq(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["converged"], true);
    assert!(v["objective"].as_f64().unwrap() < 1e-10);
    assert_eq!(commsq(&args).stdout, r.stdout);

    let r = commsq(&["search", "--n", "7", "--masks", "0,1/2,3/0,1/2,3", "--max-iters", "1", "--seed", "9"]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["converged"], false);

    assert_eq!(commsq(&["search", "--n", "4", "--masks", "0,1/1/2/3"]).code, 2);
    assert_eq!(commsq(&["search", "--n", "4", "--masks", "0/1/2"]).code, 2);
    assert_eq!(commsq(&["search", "--masks", "0/1/2/3"]).code, 2);
}

#[test]
fn repro_report() {
    let r = commsq(&["repro"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["rank"], 36);
    assert_eq!(v["minor_order"], 36);
    assert_eq!(v["det_nonzero"], true);
    assert!(r.stderr.contains("rank 36"));
}
