use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncot"))
}

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn record(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn dist_on_sample_problem() {
    let p = problems().join("qubit.json");
    let out = run(&["dist", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = record(&out);
    assert_eq!(r["command"], "dist");
    assert_eq!(r["feasible"], true);
    let d = r["distance"].as_f64().unwrap();
    let e = r["energy"].as_f64().unwrap();
    assert!(d > 0.0 && (d * d - e).abs() < 1e-15);
}

#[test]
fn identical_densities_give_zero() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind":"algebra","derivation":{"generators":[[[1,0],[0,-1]]]},"p":{"diag":[0.3,0.7]},"q":{"diag":[0.3,0.7]}}"#;
    let path = write(&dir, "same.json", body);
    let out = run(&["dist", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&out)["distance"].as_f64(), Some(0.0));
}

#[test]
fn missing_generators_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "bad.json", r#"{"kind":"algebra","derivation":{},"p":{"diag":[1,0]},"q":{"diag":[0,1]}}"#);
    let out = run(&["dist", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("derivation.generators"));
}

#[test]
fn syntax_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "broken.json", "{\n  \"kind\": \"algebra\",\n  \"p\": [1, \n}");
    let out = run(&["dist", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["dist"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["check", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let p = problems().join("qubit.json");
    assert_eq!(run(&["dist", p.to_str().unwrap(), "--jobs", "0"]).status.code(), Some(1));
    assert_eq!(run(&["disintegrate", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn infeasible_pair_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind":"algebra","derivation":{"generators":[[[1,0],[0,-1]]]},"p":{"diag":[0.3,0.7]},"q":{"diag":[0.6,0.4]}}"#;
    let path = write(&dir, "stuck.json", body);
    let out = run(&["dist", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = record(&out);
    assert_eq!(r["feasible"], false);
    assert!(r["distance"].is_null());
}

#[test]
fn mass_mismatched_bundle_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind":"bundle","base":{"weights":[1,1]},
        "fibers":[{"generators":[[[0,1],[1,0]]]},{"generators":[[[0,1],[1,0]]]}],
        "P":[{"re":0}, 0],"Q":[]}"#;
    // invalid shapes first: an input error
    let path = write(&dir, "shape.json", body);
    assert_eq!(run(&["disintegrate", path.to_str().unwrap()]).status.code(), Some(1));

    let body = r#"{"kind":"bundle","base":{"weights":[1,1]},
        "fibers":[{"generators":[[[0,1],[1,0]]]},{"generators":[[[0,1],[1,0]]]}],
        "P":[[[0.3,0],[0,0.2]],[[0.25,0],[0,0.25]]],
        "Q":[[[0.2,0],[0,0.2]],[[0.3,0],[0,0.3]]]}"#;
    let path = write(&dir, "mass.json", body);
    let out = run(&["disintegrate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = record(&out);
    assert_eq!(r["feasible"], false);
    assert_eq!(r["offending_fiber"], 0);
}

#[test]
fn disintegrate_single_fiber_matches_dist() {
    let dir = tempfile::tempdir().unwrap();
    let alg = r#"{"kind":"algebra","derivation":{"generators":[[[0,1],[1,0]],[[1,0],[0,-1]]]},
        "p":[[0.6,0.1],[0.1,0.4]],"q":[[0.3,0],[0,0.7]]}"#;
    let bun = r#"{"kind":"bundle","base":{"weights":[1]},"fibers":[{"generators":[[[0,1],[1,0]],[[1,0],[0,-1]]]}],
        "P":[[[0.6,0.1],[0.1,0.4]]],"Q":[[[0.3,0],[0,0.7]]]}"#;
    let a = record(&run(&["dist", write(&dir, "a.json", alg).to_str().unwrap()]));
    let b = record(&run(&["disintegrate", write(&dir, "b.json", bun).to_str().unwrap()]));
    assert_eq!(a["distance"], b["distance"]);
    assert_eq!(b["fibers"][0]["w2"], a["distance"]);
}

#[test]
fn disintegrate_sample_bundle() {
    let p = problems().join("bundle.json");
    let out = run(&["disintegrate", p.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = record(&out);
    assert_eq!(r["fibers"][1]["label"], "right");
    let total = r["total_sq"].as_f64().unwrap();
    let sum: f64 = [1.0, 2.0]
        .iter()
        .enumerate()
        .map(|(j, w)| w * r["fibers"][j]["mass"].as_f64().unwrap() * r["fibers"][j]["energy"].as_f64().unwrap())
        .sum();
    assert!((total - sum).abs() < 1e-15);
}

#[test]
fn geodesic_writes_the_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("path.json");
    let p = problems().join("qubit.json");
    let out = run(&["geodesic", p.to_str().unwrap(), "--steps", "8", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    assert_eq!(r["steps"], 8);
    let grid: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(grid["densities"].as_array().unwrap().len(), 9);
    assert_eq!(grid["step_energies"].as_array().unwrap().len(), 8);
    let total: f64 = grid["step_energies"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - r["energy"].as_f64().unwrap()).abs() < 1e-14);
    // every emitted density reads back as a density
    for d in grid["densities"].as_array().unwrap() {
        ncot::io::parse_density(d, "density").unwrap();
    }
}

#[test]
fn heat_entropy_is_nonincreasing_and_csv_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind":"algebra","derivation":{"generators":[[[1,0],[0,-1]]]},"p":[[0.6,0.1],[0.1,0.4]],
        "heat":{"times":[0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0]}}"#;
    let path = write(&dir, "heat.json", body);
    let csv = dir.path().join("heat.csv");
    let out = run(&["heat", path.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    let ent: Vec<f64> = r["entropy"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(ent.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(r["dissipation"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() <= 0.0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,entropy,dissipation");
    assert_eq!(lines.len(), 12);
}

#[test]
fn entropy_of_maximally_mixed_state() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind":"algebra","derivation":{"generators":[]},"p":{"diag":[1,1,1]}}"#;
    let path = write(&dir, "mixed.json", body);
    let out = run(&["entropy", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    assert!((r["p"].as_f64().unwrap() + 3f64.ln()).abs() < 1e-15);
    assert!(r["q"].is_null());
}

#[test]
fn curvature_is_seeded() {
    let p = problems().join("qubit.json");
    let a = run(&["curvature", p.to_str().unwrap(), "--seed", "3", "--samples", "3"]);
    let b = run(&["curvature", p.to_str().unwrap(), "--seed", "3", "--samples", "3", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = record(&a);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["pairs_evaluated"].as_u64().unwrap() + r["pairs_skipped"].as_u64().unwrap(), 3);

    let bundle = problems().join("bundle.json");
    let out = run(&["curvature", bundle.to_str().unwrap(), "--samples", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&out)["bound_satisfied"], true);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let p = problems().join("qubit.json");
    let out = run(&["dist", p.to_str().unwrap(), "--max-iters", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let r = record(&out);
    assert_eq!(r["converged"], false);
    assert!(r["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn output_is_reproducible() {
    let p = problems().join("qubit.json");
    let a = run(&["dist", p.to_str().unwrap(), "--seed", "5"]);
    let b = run(&["dist", p.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["check", "spectral", "--seed", "5"]);
    let d = run(&["check", "spectral", "--seed", "5"]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(c.stdout, d.stdout);
    assert!(String::from_utf8_lossy(&c.stdout).contains("PASS"));
}
