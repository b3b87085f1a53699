use std::path::Path;
use std::process::{Command, Output};

use flowforge::geometry::FlowFieldParams;
use flowforge::pipeline::RunConfig;
use serde_json::Value;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::with_ptl_depth(0.3e-3);
    cfg.geometry = FlowFieldParams {
        n_channels: 4,
        channel_length_center: 8e-3,
        distributor_depth_in: 3e-3,
        distributor_depth_out: 3e-3,
        ..FlowFieldParams::default()
    };
    cfg.optimizer.max_iterations = 1;
    cfg.mco.budget = 4;
    cfg.output_dir = "out".into();
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn flowforge(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowforge"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("FLOWFORGE_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(flowforge(&missing, &["mesh"]).status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"validation": {"ptl_depth": 1e-4}, "unknown": 1}"#).unwrap();
    let out = flowforge(&bad, &["mesh"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
    assert_eq!(flowforge(&bad, &["no-such-command"]).status.code(), Some(1));
}

#[test]
fn schema_is_printed() {
    let out = flowforge(Path::new("unused.json"), &["schema"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["required"][0], "validation");
}

#[test]
fn mesh_solve_and_report_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    assert_eq!(flowforge(&config, &["mesh"]).status.code(), Some(0));
    let out = dir.path().join("out");
    assert!(out.join("mesh_PAR.txt").exists());
    assert_eq!(flowforge(&config, &["solve"]).status.code(), Some(0));
    assert!(out.join("diagnostics_PAR.csv").exists());
    assert_eq!(flowforge(&config, &["solve", "--shape", "PAR_J2"]).status.code(), Some(1));
    assert_eq!(flowforge(&config, &["report"]).status.code(), Some(0));
    assert!(out.join("report.md").exists());
}

#[test]
fn unfinished_optimization_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let out = flowforge(&config, &["optimize", "--objective", "j1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // best-so-far is still written
    assert!(dir.path().join("out/trace_PAR_J1.csv").exists());
    assert!(dir.path().join("out/mesh_PAR_J1.txt").exists());
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    // a viscosity this small leaves the steady Newton iteration without a solution
    cfg.fluid.mu = 1e-9;
    cfg.fluid.gamma = Some(0.0);
    cfg.inflow.flow_rate = 1e-4;
    let config = write_config(dir.path(), &cfg);
    let out = flowforge(&config, &["solve"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
