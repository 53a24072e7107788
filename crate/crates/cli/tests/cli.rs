use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], out: &tempfile::TempDir) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblelab"))
        .args(args)
        .arg("--out")
        .arg(out.path())
        .output()
        .expect("binary runs")
}

fn run_scenario(cmd: &str, name: &str, extra: &[&str]) -> (i32, Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(name);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args, &dir);
    let code = o.status.code().unwrap();
    let json = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    (code, json, dir)
}

#[test]
fn density_identity_and_seam() {
    let (code, j, dir) = run_scenario("density", "identity.toml", &["--grid", "32"]);
    assert_eq!(code, 0);
    assert_eq!(j["schema"], "bubblelab.density/1");
    assert!((j["e_holo"]["mean"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv.starts_with("chart,re,im,e_holo,e_anti,q_holo,q_anti,q_plus,sigma\n"));

    let (code, j, _) = run_scenario("density", "z2.toml", &["--grid", "32"]);
    assert_eq!(code, 0);
    for k in ["min", "max"] {
        assert!((j["seam"]["e_holo"][k].as_f64().unwrap() - 4.0).abs() < 1e-9);
    }
}

#[test]
fn density_flat_target_has_no_positive_curvature() {
    let (code, _, dir) = run_scenario("density", "flat.toml", &["--grid", "32"]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for r in rows {
        let q_plus: f64 = r.split(',').nth(7).unwrap().parse().unwrap();
        assert_eq!(q_plus, 0.0);
    }
}

#[test]
fn verify_degree_two_and_identity() {
    let (code, j, _) = run_scenario("verify", "z2.toml", &["--grid", "256"]);
    assert_eq!(code, 0, "{j}");
    let checks = j["checks"].as_array().unwrap();
    let t1 = checks.iter().find(|c| c["name"] == "theorem1").unwrap();
    assert_eq!(t1["status"], "pass");
    assert!(t1["slack"].as_f64().unwrap().abs() < 1e-5 * 4.0 * std::f64::consts::PI);

    let (code, j, _) = run_scenario("verify", "identity.toml", &["--grid", "128"]);
    assert_eq!(code, 0);
    let b = j["checks"].as_array().unwrap().iter().find(|c| c["name"] == "bochner").unwrap();
    assert_eq!(b["status"], "pass");
    assert!(b["details"]["sup_beta_holo_sq"].as_f64().unwrap() < 1e-10);
}

#[test]
fn verify_non_harmonic_is_informational() {
    let (code, j, _) = run_scenario("verify", "nonharmonic.toml", &[]);
    assert_eq!(code, 0);
    assert_eq!(j["harmonic_residual"]["status"], "not harmonic");
    assert!(j["checks"].as_array().unwrap().is_empty());
}

#[test]
fn bubble_single_two_and_constant() {
    let (code, j, dir) = run_scenario("bubble", "shrinking-identity.toml", &[]);
    assert_eq!(code, 0);
    let tree = &j["tree"];
    assert_eq!(tree["leaves"], 1);
    let node = &tree["nodes"][0];
    let pi = std::f64::consts::PI;
    assert!((node["m"].as_f64().unwrap() / (4.0 * pi) - 1.0).abs() < 0.02);
    assert!((node["q"].as_f64().unwrap() / (2.0 * pi) - 1.0).abs() < 0.02);
    let csv = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);

    let (code, j, _) = run_scenario("bubble", "two-bubble.toml", &["--schedule", "8,16,32"]);
    assert_eq!(code, 0);
    assert_eq!(j["tree"]["leaves"], 2);
    assert_eq!(j["tree"]["schedule"], serde_json::json!([8, 16, 32]));

    let (code, j, _) = run_scenario("bubble", "constant.toml", &[]);
    assert_eq!(code, 0);
    assert_eq!(j["tree"]["leaves"], 0);
    assert!(j["tree"]["nodes"].as_array().unwrap().is_empty());
}

#[test]
fn riesz_examples() {
    let (code, j, _) = run_scenario("riesz", "atom-pi.toml", &[]);
    assert_eq!(code, 0);
    let ineq = &j["report"]["inequalities"][0];
    assert!((ineq["lhs"].as_f64().unwrap() / (4.0 * std::f64::consts::PI / 3.0) - 1.0).abs() < 1e-4);
    assert!((ineq["rhs"].as_f64().unwrap() - 11.847).abs() < 1e-3);

    let (code, j, _) = run_scenario("riesz", "harmonic-phi.toml", &["--grid", "32"]);
    assert_eq!(code, 0);
    assert!(j["report"]["kappa"].as_f64().unwrap().abs() < 1e-8);

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["riesz", scenario("inadmissible-p.toml").to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("admissible"));
}

#[test]
fn invalid_scenarios_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"typo\"\n\n[map]\nkind = \"identity\"\ndegre = 3\n").unwrap();
    let o = run(&["density", bad.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    // tagged tables report the line of their header
    assert!(err.contains("degre") && err.contains("line 3"), "{err}");

    let o = run(&["verify", dir.path().join("missing.toml").to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));

    // a family scenario handed to a single-map command
    let o = run(&["density", scenario("constant.toml").to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_is_byte_identical() {
    for (cmd, name, extra) in [
        ("density", "z2.toml", vec!["--grid", "24"]),
        ("riesz", "near-bubble.toml", vec!["--grid", "24"]),
        ("bubble", "shrinking-identity.toml", vec!["--schedule", "8,16,32"]),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let path = scenario(name);
        let mut args = vec![cmd, path.to_str().unwrap()];
        args.extend(extra.iter().copied());
        let (oa, ob) = (run(&args, &a), run(&args, &b));
        assert_eq!(oa.stdout, ob.stdout, "{cmd} {name}");
        let file = format!("{cmd}.json");
        assert_eq!(std::fs::read(a.path().join(&file)).unwrap(), std::fs::read(b.path().join(&file)).unwrap());
    }
}

#[test]
fn help_documents_defaults() {
    let o = Command::new(env!("CARGO_BIN_EXE_bubblelab")).args(["verify", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--grid", "--schedule", "--out", "512", "128", "4,8,16,32,64"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}
