use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn charges(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_charges"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn young1d_cos_sin() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("partial.csv");
    let o = charges(&[
        "young1d", "--f", "cos(x)", "--g", "sin(x)", "--depth", "12", "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let value = v["result"]["value"].as_f64().unwrap();
    assert!((value - (0.5 + 2f64.sin() / 4.0)).abs() < 1e-4, "{value}");
    assert_eq!(v["config"]["depth"], 12);
    assert!(v["tool_version"].as_str().unwrap().starts_with("charges "));
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("generation,partial_sum\n-1,"));
    assert_eq!(text.lines().count(), 14);
}

#[test]
fn transform_round_trip_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let fc = dir.path().join("fc.json");
    let cc = dir.path().join("cc.json");
    let o = charges(&[
        "transform", "--density", "sin(3*x) + y^2 - x*y", "--depth", "5", "--output",
        fc.to_str().unwrap(), "--roundtrip",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rt = &stdout_json(&o)["result"]["roundtrip"];
    assert!(rt["max_rel_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(read_json(&fc)["kind"], "faber-coeffs");

    let o = charges(&["transform", "--input", fc.to_str().unwrap(), "--output", cc.to_str().unwrap(), "--roundtrip"]);
    assert_eq!(code(&o), 0);
    let env = read_json(&cc);
    assert_eq!(env["kind"], "cube-charge");
    assert_eq!(env["layout"], "row-major");
    assert_eq!(env["config"]["roundtrip"], true);

    let o = charges(&["transform", "--input", cc.to_str().unwrap(), "--roundtrip"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["result"]["roundtrip"]["pass"].as_bool().unwrap());
}

#[test]
fn fbs_variance_check_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let o = charges(&[
        "--threads", "1", "fbs", "--H", "0.5,0.5", "--seed", "17", "--check-variance", "--report",
        r1.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = charges(&[
        "--threads", "4", "fbs", "--H", "0.5,0.5", "--seed", "17", "--check-variance", "--report",
        r2.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let (v, w) = (read_json(&r1), read_json(&r2));
    assert_eq!(v["result"].to_string(), w["result"].to_string());
    assert_eq!(v["result"]["rectangles"].as_array().unwrap().len(), 20);
    assert_eq!(v["config"]["ensemble"], 10_000);
}

#[test]
fn sampled_fields_and_chargeability() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("ens");
    let o = charges(&[
        "fbs", "--H", "0.9,0.9", "--depth", "5", "--seed", "3", "--ensemble", "150", "--out-dir",
        ens.to_str().unwrap(), "--format", "bin",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let meta = read_json(&ens.join("metadata.json"));
    assert_eq!(meta["H"], serde_json::json!([0.9, 0.9]));
    assert_eq!(meta["members"].as_array().unwrap().len(), 150);
    assert!(ens.join("member_00000.bin").exists());

    let csv = dir.path().join("m.csv");
    let out = dir.path().join("report.json");
    let o = charges(&[
        "chargeability", "--dir", ens.to_str().unwrap(), "--gens", "2,3,4,5", "--csv",
        csv.to_str().unwrap(), "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["result"]["verdict"], "chargeable-consistent");
    assert!((r["result"]["model"]["eta_over_q"].as_f64().unwrap() - 0.775).abs() < 1e-12);
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("n,log2_m_n\n2,"));
}

#[test]
fn brownian_paths_written_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bm");
    let o = charges(&["bm", "--depth", "6", "--seed", "5", "--ensemble", "3", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let first = fs::read_to_string(out.join("member_00000.csv")).unwrap();
    assert!(first.starts_with("value\n0\n"));
    assert_eq!(first.lines().count(), 66);
    let header = read_json(&out.join("member_00002.json"));
    assert_eq!(header["kind"], "vertex");
    assert_eq!(header["config"]["seed"], 5);
}

#[test]
fn seed_is_mandatory_for_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let o = charges(&["bm", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = charges(&["fbs", "--H", "0.5", "--check-variance"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&charges(&["frobnicate"])), 2);
    assert_eq!(code(&charges(&["fbs", "--H", "0.5,1.2", "--seed", "1", "--check-variance"])), 2);
    assert_eq!(code(&charges(&["young1d", "--f", "x", "--g", "x +", "--depth", "4"])), 2);
    assert_eq!(
        code(&charges(&["young", "--f", "x", "--density", "1", "--beta", "0.3", "--gamma", "0.4"])),
        2
    );
    assert_eq!(code(&charges(&["transform", "--input", "/nonexistent/cc.json"])), 3);
    assert_eq!(code(&charges(&["hk", "--f", "1/x"])), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"young1d": {"f": "x", "g": "x", "depth": 4}}"#).unwrap();
    let o = charges(&["--config", cfg.to_str().unwrap(), "young1d", "--depth", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["config"]["depth"], 10);
    assert!((v["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-4);

    fs::write(&cfg, r#"{"depht": 4}"#).unwrap();
    let o = charges(&["--config", cfg.to_str().unwrap(), "young1d", "--f", "x", "--g", "x"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hk_of_oscillating_derivative() {
    let o = charges(&["hk", "--primitive", "x^2*sin(1/x^2)", "--fill", "0", "--tol", "1e-3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = &stdout_json(&o)["result"];
    assert!((r["value"].as_f64().unwrap() - 1f64.sin()).abs() < 1e-3);
    assert_eq!(r["filled_samples"], 1);
    // the primitive has no finite value at 0, so no increment is reported
    assert!(r.get("primitive_increment").is_none());

    let o = charges(&["hk", "--primitive", "x^3", "--a", "-1", "--b", "2", "--tol", "1e-8"]);
    assert_eq!(code(&o), 0);
    let r = &stdout_json(&o)["result"];
    assert!(r["error"].as_f64().unwrap() < 1e-7, "{r}");
}

#[test]
fn divcheck_polynomial_field() {
    for shape in ["unit", "l-shape"] {
        let o = charges(&["divcheck", "--field", "x^2*y + x; y^3 - x*y", "--shape", shape]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let r = &stdout_json(&o)["result"];
        assert!(r["gap"].as_f64().unwrap() < 1e-6, "{shape}: {r}");
    }
}

#[test]
fn young_writes_result_charge() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y.json");
    let o = charges(&[
        "young", "--f", "x + y", "--density", "1 + x*y", "--depth", "5", "--beta", "0.9", "--gamma",
        "0.9", "--tag", "center", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let total = stdout_json(&o)["result"]["total"].as_f64().unwrap();
    assert!((total - 4.0 / 3.0).abs() < 1e-3);
    assert_eq!(read_json(&out)["depth"], 5);
}

#[test]
fn holder_and_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let o = charges(&["holder", "--f", "sqrt(x)", "--depth", "10", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["result"]["bound_holds"], true);
    assert!(fs::read_to_string(csv).unwrap().starts_with("n,log2_max_coeff\n"));

    let o = charges(&["geometry", "--cubes", "1:0,0;1:1,0;1:0,1"]);
    assert_eq!(code(&o), 0);
    let r = &stdout_json(&o)["result"];
    assert_eq!(r["volume"], 0.75);
    assert_eq!(r["perimeter"], 4.0);
}
