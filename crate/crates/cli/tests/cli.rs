use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qhemi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhemi")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "structured"];
    full.extend_from_slice(args);
    let out = qhemi(&full);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn construct(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut full = vec!["construct", "--out", path.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = qhemi(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn stats_small_cases() {
    let s = json(&["stats", "--p", "3"]);
    assert_eq!((s["points"].as_u64(), s["maximals"].as_u64(), s["t_plus_one"].as_u64()), (Some(40), Some(40), Some(4)));
    assert_eq!((s["order_b"].as_u64(), s["order_a"].as_u64()), (Some(12), Some(24)));
    assert_eq!(s["n_b"].as_u64().unwrap(), 2 * s["m"].as_u64().unwrap());
    let s = json(&["stats", "--p", "5"]);
    assert_eq!((s["t_plus_one"].as_u64(), s["degree"].as_u64()), (Some(6), Some(3)));
}

#[test]
fn rejects_even_and_bad_input() {
    assert_eq!(qhemi(&["stats", "--p", "2"]).status.code(), Some(2));
    assert_eq!(qhemi(&["stats", "--p", "9"]).status.code(), Some(2));
    assert_eq!(qhemi(&["stats", "--p", "3", "--d", "1"]).status.code(), Some(2));
    assert_eq!(qhemi(&["stats", "--p", "3", "--k", "2", "--modulus", "1,1,1"]).status.code(), Some(2));
    assert_eq!(qhemi(&["frobnicate"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let junk = dir.path().join("junk.cert");
    std::fs::write(&junk, "not a certificate\n").unwrap();
    assert_eq!(qhemi(&["verify", junk.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qhemi(&["verify", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn construct_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    for (name, args) in [("q3.cert", vec!["--p", "3"]), ("q9.cert", vec!["--p", "3", "--k", "2", "--mask", "2a"])] {
        let path = construct(dir.path(), name, &args);
        let v = json(&["verify", path.to_str().unwrap()]);
        assert_eq!(v["accepted"], Value::Bool(true), "{v}");
        assert_eq!(v["size"], v["expected_size"]);
        assert_eq!(v["histogram"].as_object().unwrap().len(), 1);
    }
}

#[test]
fn rank_three_default_mask() {
    let dir = TempDir::new().unwrap();
    let path = construct(dir.path(), "q3d3.cert", &["--p", "3", "--d", "3"]);
    let v = json(&["verify", path.to_str().unwrap()]);
    assert_eq!(v["accepted"], Value::Bool(true));
    assert_eq!(v["size"].as_u64(), Some(560));
    assert_eq!(v["histogram"]["20"].as_u64(), Some(364));
}

#[test]
fn sequential_and_parallel_certificates_match() {
    let a = qhemi(&["--jobs", "1", "construct", "--p", "5", "--mask", "9"]);
    let b = qhemi(&["--jobs", "2", "construct", "--p", "5", "--mask", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("qhemi-certificate 1\n"));
}

/// Member lines of a certificate, keyed by position in the file.
fn member_lines(text: &str) -> (usize, Vec<String>) {
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    let start = lines.iter().position(|l| l.starts_with("members ")).unwrap() + 1;
    let count: usize = lines[start - 1]["members ".len()..].parse().unwrap();
    (start, lines[start..start + count].to_vec())
}

#[test]
fn swapped_member_is_rejected() {
    let dir = TempDir::new().unwrap();
    let h = construct(dir.path(), "h.cert", &["--p", "3", "--mask", "0"]);
    let comp = construct(dir.path(), "c.cert", &["--p", "3", "--mask", "7"]);
    let text = std::fs::read_to_string(&h).unwrap();
    let (start, _) = member_lines(&text);
    let (_, others) = member_lines(&std::fs::read_to_string(&comp).unwrap());

    // a maximal from the complement, with its correct id
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[start] = others[0].clone();
    let bad = dir.path().join("bad.cert");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = qhemi(&["--format", "structured", "verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["accepted"], Value::Bool(false));
    assert!(v["histogram"].as_object().unwrap().len() > 1);

    // right matrix, wrong id
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let (id, body) = lines[start].split_once(' ').unwrap();
    let other_id: u32 = others[0].split_once(' ').unwrap().0.parse().unwrap();
    assert_ne!(id.parse::<u32>().unwrap(), other_id);
    lines[start] = format!("{other_id} {body}");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    assert_eq!(qhemi(&["verify", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn edited_gram_is_a_model_mismatch() {
    let dir = TempDir::new().unwrap();
    let h = construct(dir.path(), "h.cert", &["--p", "3"]);
    let text = std::fs::read_to_string(&h).unwrap().replacen("gram 0 0 0 0 1", "gram 0 0 0 0 2", 1);
    let bad = dir.path().join("gram.cert");
    std::fs::write(&bad, text).unwrap();
    let out = qhemi(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match the recomputed model"));
}

#[test]
fn bad_mask_reports_expected_length() {
    let out = qhemi(&["construct", "--p", "3", "--mask", "000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 bits"));
    // bit above m
    assert_eq!(qhemi(&["construct", "--p", "3", "--mask", "8"]).status.code(), Some(2));
}

#[test]
fn construct_all_writes_the_family() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("family");
    let out = qhemi(&["construct", "--p", "3", "--all", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 8);
    for f in &files {
        assert_eq!(qhemi(&["verify", f.to_str().unwrap()]).status.code(), Some(0));
    }
    let out = qhemi(&["construct", "--p", "3", "--all", "--cap", "4", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn orbits_report_pairs() {
    let o = json(&["orbits", "--p", "3"]);
    let maxs = o["maximal_orbits"].as_array().unwrap();
    assert_eq!(maxs.len(), 6);
    for row in maxs {
        let img = row["tau_image"].as_u64().unwrap() as usize;
        assert_ne!(img as u64, row["id"].as_u64().unwrap());
        assert_eq!(maxs[img]["size"], row["size"]);
    }
    for row in o["point_orbits"].as_array().unwrap() {
        assert_eq!(row["tau_image"], row["id"]);
    }
    assert_eq!(o["a_orbits"].as_array().unwrap().len(), 3);
}

#[test]
fn selftest_passes() {
    for args in [vec!["--p", "3"], vec!["--p", "3", "--k", "2"], vec!["--p", "3", "--d", "3"]] {
        let mut full = vec!["selftest"];
        full.extend(args);
        let out = qhemi(&full);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    }
}
