//! Runs the `cdrisk` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FGM: &str = r#"{"variant":"sarmanov","theta":0.5,"kernel1":{"kind":"fgm1"},"kernel2":{"kind":"fgm2"},
    "F":{"family":"pareto","alpha":2.0,"scale":1.0},"G":{"family":"uniform","a":0.0,"b":1.0}}"#;
const AMH_MINUS_ONE: &str = r#"{"variant":"amh","theta":-1.0,
    "F":{"family":"pareto","alpha":2.0,"scale":1.0},"G":{"family":"uniform","a":0.0,"b":1.0}}"#;

fn cdrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdrisk")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, model: &str, command: &str, extra: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!(r#"{{"model":{model},"command":{command}{extra}}}"#)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_reports_the_failed_condition() {
    let dir = tempfile::tempdir().unwrap();
    let model = FGM.replace("0.5", "3.0");
    let cfg = write_config(dir.path(), "v.json", &model, r#"{"validate":{}}"#, "");
    let out = cdrisk(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = v["result"]["report"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["mandatory"] == true && c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"density_nonnegativity"), "{failed:?}");
}

#[test]
fn breiman_writes_json_with_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("b.json");
    let extra = format!(r#","output":{{"json_path":"{}"}}"#, json.display());
    let cfg = write_config(dir.path(), "b.cfg", FGM, r#"{"breiman":{}}"#, &extra);
    let out = cdrisk(&["breiman", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert!((v["result"]["value"].as_f64().unwrap() - 5.0 / 12.0).abs() < 1e-10);
    assert_eq!(v["manifest"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn tail_ratio_chart_has_curve_and_asymptote() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("t.svg");
    let csv = dir.path().join("t.csv");
    let extra = format!(r#","seed":"0xabc","output":{{"svg_path":"{}","csv_path":"{}"}}"#, svg.display(), csv.display());
    let cfg = write_config(dir.path(), "t.cfg", FGM, r#"{"tail-ratio":{"thresholds":[5,10,20],"N":50000}}"#, &extra);
    let out = cdrisk(&["tail-ratio", "--config", &cfg, "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let chart = std::fs::read_to_string(svg).unwrap();
    assert!(chart.contains("<polyline") && chart.contains("stroke-dasharray"));
    assert_eq!(chart.matches("<circle").count(), 3);
    let table = std::fs::read_to_string(csv).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn cd_check_chart_names_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("d.svg");
    let extra = format!(r#","output":{{"svg_path":"{}"}}"#, svg.display());
    let cfg = write_config(
        dir.path(),
        "d.cfg",
        AMH_MINUS_ONE,
        r#"{"cd-check":{"x_grid":[10,100,1000],"policy":{"kind":"tail_extended"}}}"#,
        &extra,
    );
    let out = cdrisk(&["cd-check", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(svg).unwrap().contains("NotCd"));
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", FGM, r#"{"term-tail":{"i":2,"x_grid":[5],"N":20000}}"#, r#","seed":1"#);
    let a = cdrisk(&["term-tail", "--config", &cfg, "--seed", "0x10"]);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["manifest"]["seed"], 16);
    assert_eq!(v["manifest"]["config"]["seed"], 16);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.cfg", FGM, r#"{"validate":{}}"#, r#","speed":3"#);
    assert_eq!(cdrisk(&["validate", "--config", &unknown]).status.code(), Some(2));
    // command block and subcommand disagree
    assert_eq!(cdrisk(&["breiman", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(cdrisk(&["validate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    let not_cd = write_config(dir.path(), "n.cfg", AMH_MINUS_ONE, r#"{"breiman":{}}"#, "");
    assert_eq!(cdrisk(&["breiman", "--config", &not_cd]).status.code(), Some(2));
    let shallow = write_config(dir.path(), "r.cfg", FGM, r#"{"tail-ratio":{"thresholds":[2],"N":20000}}"#, r#","seed":1"#);
    assert_eq!(cdrisk(&["tail-ratio", "--config", &shallow]).status.code(), Some(3));
}

#[test]
fn infinite_ruin_records_depth_and_inf_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let extra = format!(r#","seed":5,"output":{{"csv_path":"{}"}}"#, csv.display());
    let cfg = write_config(dir.path(), "r.cfg", FGM, r#"{"ruin":{"x_grid":[10,20],"n":"inf","N":20000,"tail_tol":0.001}}"#, &extra);
    let out = cdrisk(&["ruin", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["result"]["depth"].as_u64().unwrap() >= 10);
    let table = std::fs::read_to_string(csv).unwrap();
    assert!(table.starts_with("x,n,N,hits,psi_hat,stderr,prediction,ratio\n"));
    assert!(table.lines().nth(1).unwrap().split(',').nth(1) == Some("inf"));
}
