use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rainbow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rainbow")).args(args).output().expect("binary runs")
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut args = vec!["gen", "-o", &path];
    args.extend_from_slice(extra);
    let out = rainbow(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn trivial(dir: &Path) -> String {
    gen(
        dir,
        "trivial.json",
        &["--kind", "matchings-blowup", "--clusters", "2", "--cluster-size", "10", "--density", "1", "--seed", "1"],
    )
}

#[test]
fn trivial_instance_embeds_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let inst = trivial(dir.path());
    let report = dir.path().join("report.json");
    let out = rainbow(&["embed", &inst, "--seed", "3", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["verified"], Value::Bool(true));
    assert_eq!(summary["phi"].as_array().unwrap().len(), 20);
    assert!(summary["rounds"].as_array().is_some_and(|r| !r.is_empty()));
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(full["exit_code"], 0);
    assert!(full["timings_ms"]["embed"].is_number());

    let out = rainbow(&["verify", &inst, report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"h\": [1, 2").unwrap();
    for cmd in ["embed", "tree-embed", "partial-embed", "quasirandom-embed"] {
        assert_eq!(rainbow(&[cmd, bad.to_str().unwrap()]).status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn wrong_kind_for_command_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = trivial(dir.path());
    assert_eq!(rainbow(&["tree-embed", &inst]).status.code(), Some(2));
}

#[test]
fn zero_round_budget_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let inst = trivial(dir.path());
    let report = dir.path().join("report.json");
    let out = rainbow(&["embed", &inst, "--budget-rounds", "0", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(full["error"].as_str().unwrap().contains("budget"));
    assert_eq!(full["verified"], Value::Bool(false));
}

#[test]
fn generation_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--kind", "dirac-tree", "--clusters", "3", "--cluster-size", "12", "--k-bound", "2", "--seed", "7"];
    let a = std::fs::read(gen(dir.path(), "a.json", &args)).unwrap();
    let b = std::fs::read(gen(dir.path(), "b.json", &args)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn palette_too_small_is_rejected() {
    let out = rainbow(&[
        "gen", "--kind", "matchings-blowup", "--clusters", "2", "--cluster-size", "4", "--density", "1", "--palette", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("palette"));
}

#[test]
fn tampered_embedding_is_red_with_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "inst.json",
        &["--kind", "matchings-blowup", "--clusters", "2", "--cluster-size", "10", "--density", "0.6", "--seed", "2"],
    );
    let out = rainbow(&["embed", &inst, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let mut emb: Value = serde_json::from_slice(&out.stdout).unwrap();
    // swap the images of two vertices in different clusters
    let phi = emb["phi"].as_array_mut().unwrap();
    let (a, b) = (phi[0][1].clone(), phi[10][1].clone());
    phi[0][1] = b;
    phi[10][1] = a;
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, emb.to_string()).unwrap();
    let out = rainbow(&["verify", &inst, tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(false));
    assert!(!v["spanning"]["failures"].as_array().unwrap().is_empty());
}

#[test]
fn embedding_of_another_instance_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let small = trivial(dir.path());
    let big = gen(
        dir.path(),
        "big.json",
        &["--kind", "matchings-blowup", "--clusters", "3", "--cluster-size", "10", "--density", "1"],
    );
    let out = rainbow(&["embed", &big, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let emb = dir.path().join("emb.json");
    std::fs::write(&emb, &out.stdout).unwrap();
    assert_eq!(rainbow(&["verify", &small, emb.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn application_commands_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "tree-embed",
            vec!["--kind", "dirac-tree", "--clusters", "3", "--cluster-size", "16", "--density", "0.9", "--k-bound", "2"],
        ),
        (
            "quasirandom-embed",
            vec!["--kind", "quasirandom", "--cluster-size", "24", "--density", "0.9", "--target-degree", "1"],
        ),
        (
            "partial-embed",
            vec!["--kind", "partial-embed", "--clusters", "3", "--cluster-size", "20", "--density", "0.9", "--k-bound", "2"],
        ),
    ];
    for (k, (cmd, args)) in cases.iter().enumerate() {
        let inst = gen(dir.path(), &format!("i{k}.json"), args);
        let out = rainbow(&[cmd, &inst, "--seed", "1"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let emb = dir.path().join(format!("e{k}.json"));
        std::fs::write(&emb, &out.stdout).unwrap();
        assert_eq!(rainbow(&["verify", &inst, emb.to_str().unwrap()]).status.code(), Some(0), "{cmd}");
    }
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(
        dir.path(),
        "inst.json",
        &["--kind", "matchings-blowup", "--clusters", "3", "--cluster-size", "12", "--density", "0.8", "--k-bound", "2"],
    );
    let a = rainbow(&["embed", &inst, "--seed", "5"]);
    let b = rainbow(&["embed", &inst, "--seed", "5", "--sequential"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
