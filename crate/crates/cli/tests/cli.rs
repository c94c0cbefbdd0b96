//! End-to-end CLI behavior: exit codes, output determinism, file
//! artifacts.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcball"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qcball-test-{}-{name}", std::process::id()));
    p
}

fn write_tmp(name: &str, contents: &str) -> PathBuf {
    let p = tmp(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn modulus_annulus_value_and_determinism() {
    let out1 = run(bin().args(["modulus", "annulus", "--a", "1", "--b", "2.718281828459045", "--n", "2"]));
    assert!(out1.status.success());
    let text = String::from_utf8(out1.stdout.clone()).unwrap();
    assert!(text.contains("6.283185307179"), "{text}");
    let out2 = run(bin().args(["modulus", "annulus", "--a", "1", "--b", "2.718281828459045", "--n", "2"]));
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(bin().args(["modulus", "annulus", "--a", "1"]));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[usage]:"), "{err}");

    let out = run(bin().args(["no-such-command"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_errors_exit_two() {
    let chain = write_tmp(
        "badchain.json",
        r#"{"balls": [{"center": [0, 0], "radius": 1.0}, {"center": [3, 0], "radius": 1.0}]}"#,
    );
    let out = run(bin().arg("construct").arg(&chain));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[validation]:"), "{err}");
    assert_eq!(err.lines().count(), 1, "single-line error report");

    let out = run(bin().args(["modulus", "annulus", "--a", "2", "--b", "1", "--n", "2"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn construct_two_ball_chain_outputs_bound() {
    let chain = write_tmp(
        "chain2.json",
        r#"{"balls": [{"center": [0.0, 0.0], "radius": 1.0}, {"center": [1.4142135623730951, 0.0], "radius": 1.0}]}"#,
    );
    let map_out = tmp("map2.json");
    let svg_out = tmp("chain2.svg");
    let out = run(bin()
        .arg("construct")
        .arg(&chain)
        .args(["--n", "2", "--verify-samples", "4000", "--dilatation-samples", "1500"])
        .arg("--out")
        .arg(&map_out)
        .arg("--svg")
        .arg(&svg_out));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&map_out).unwrap()).unwrap();
    let k_bound = report["k_bound"].as_f64().unwrap();
    assert!((k_bound - 2.0).abs() < 1e-9);
    assert_eq!(report["map"]["type"], "compose");
    let verification = &report["verification"];
    assert!(verification["interior_contained"].as_f64().unwrap() >= 0.999);
    assert!(verification["dilatation"]["k_max"].as_f64().unwrap() <= k_bound * 1.02);
    let svg = std::fs::read_to_string(&svg_out).unwrap();
    assert!(svg.starts_with("<svg"));

    // Stored maps feed back into the dilatation command.
    let report_out = tmp("dil.json");
    // Extract the bare map file.
    let map_file = write_tmp(
        "mapfile.json",
        &format!(
            r#"{{"n": 2, "map": {}}}"#,
            serde_json::to_string(&report["map"]).unwrap()
        ),
    );
    let out = run(bin()
        .args(["dilatation", "--count", "1000"])
        .arg("--map")
        .arg(&map_file)
        .arg("--out")
        .arg(&report_out));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_out).unwrap()).unwrap();
    assert!(rep["k_max"].as_f64().unwrap() >= 1.0);
}

#[test]
fn dilatation_csv_export() {
    let map_file = write_tmp(
        "w2.json",
        r#"{"n": 2, "map": {"type": "winding", "k": 2, "plane": [0, 1]}}"#,
    );
    let domain = write_tmp(
        "shell.json",
        r#"{"type": "shell", "center": [0.0, 0.0], "r_min": 0.2, "r_max": 1.0}"#,
    );
    let csv_out = tmp("w2.csv");
    let out = run(bin()
        .args(["dilatation", "--count", "500"])
        .arg("--map")
        .arg(&map_file)
        .arg("--domain")
        .arg(&domain)
        .arg("--csv")
        .arg(&csv_out));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x0,x1,sigma_max,sigma_min,jacobian,k_o,k_i");
    assert_eq!(lines.count(), 500);
}

#[test]
fn verify_preimage_and_single_checks() {
    let out = run(bin().args([
        "verify", "preimage", "--d2", "0.1", "--n", "2", "--k", "2", "--p", "2", "--t", "0.5",
    ]));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);

    let map_file = write_tmp(
        "w2b.json",
        r#"{"n": 2, "map": {"type": "winding", "k": 2, "plane": [0, 1]}}"#,
    );
    let family = write_tmp(
        "fam.json",
        r#"{"type": "annulus", "a": 1.0, "b": 2.718281828459045}"#,
    );
    let out = run(bin()
        .args(["verify", "poletskii", "--grid", "64"])
        .arg("--map")
        .arg(&map_file)
        .arg("--family")
        .arg(&family));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let check: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(check["passed"], true);

    let out = run(bin()
        .args(["verify", "ko", "--multiplicity", "2", "--grid", "64"])
        .arg("--map")
        .arg(&map_file)
        .arg("--family")
        .arg(&family));
    assert!(out.status.success());
}

#[test]
fn render_writes_svg() {
    let chain = write_tmp(
        "chainr.json",
        r#"{"balls": [{"center": [0.0, 0.0], "radius": 1.0}, {"center": [1.2, 0.0], "radius": 1.0}]}"#,
    );
    let svg_out = tmp("render.svg");
    let out = run(bin()
        .arg("render")
        .arg("--chain")
        .arg(&chain)
        .arg("--out")
        .arg(&svg_out)
        .args(["--samples", "400"]));
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&svg_out).unwrap();
    assert!(svg.contains("<circle"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["verify", "suite", "--grid", "64", "--trials", "10"];
    let default = run(bin().args(args));
    assert!(default.status.success());
    let capped = run(bin().env("QBK_THREADS", "1").args(args));
    assert!(capped.status.success());
    assert_eq!(default.stdout, capped.stdout);
}

#[test]
fn grid_command_reads_ring_files() {
    let ring = write_tmp(
        "ring.json",
        r#"{"n": 2,
            "inner": {"type": "ball", "center": [0.0, 0.0], "radius": 1.0},
            "outer": {"type": "sphere", "center": [0.0, 0.0], "radius": 2.718281828459045}}"#,
    );
    let out = run(bin()
        .args(["modulus", "grid", "--res", "128"])
        .arg("--ring")
        .arg(&ring));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let got = v["value"].as_f64().unwrap();
    assert!((got - 2.0 * std::f64::consts::PI).abs() / (2.0 * std::f64::consts::PI) < 0.02);
}
