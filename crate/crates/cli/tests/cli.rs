use std::path::Path;
use std::process::Command;

use fods_cli::{load_config, run_experiment, TraceTable};
use fods_core::presets::paper_model;
use fods_core::{simulate, Vector};

fn fods(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fods")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "scenario = \"mpc\"\n[mpc]\nprediction_horizon = 4\ncontrol_horizon = 5\n");
    let out = fods(&["mpc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mpc.control_horizon") && err.contains("mpc.prediction_horizon"), "{err}");

    let empty = write(dir.path(), "empty.toml", "");
    assert_eq!(fods(&["sweep", "--config", &empty]).status.code(), Some(2));
    let wrong = write(dir.path(), "wrong.toml", "scenario = \"simulate\"\n");
    assert_eq!(fods(&["mpc", "--config", &wrong]).status.code(), Some(2));
}

#[test]
fn missing_config_exits_with_4() {
    assert_eq!(fods(&["simulate", "--config", "/nonexistent/x.toml"]).status.code(), Some(4));
}

#[test]
fn undetectable_observer_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "u.toml",
        "scenario = \"observe\"\n[model]\na = [[0.0, 0.0], [0.0, 0.3]]\nb = [[1.0], [1.0]]\nc = [[1.0, 0.0]]\nalpha = [0.5, 0.5]\n[observer]\ntarget_radius = 0.1\n",
    );
    let out_dir = dir.path().join("out");
    let out = fods(&["observe", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unobservable"));
}

#[test]
fn mpc_trace_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = fods(&["mpc", "--preset", "paper", "--out", dir.path().to_str().unwrap(), "--horizon", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = TraceTable::parse(&std::fs::read_to_string(dir.path().join("mpc.csv")).unwrap()).unwrap();
    let expected: Vec<String> = ["k", "t", "x1", "x2", "x3", "x4", "xhat1", "xhat2", "xhat3", "xhat4", "u", "y", "ref1", "ref2", "ref3", "ref4"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(table.header, expected);
    assert_eq!(table.rows.len(), 41);
    assert_eq!(table.column("t").unwrap()[16], 0.1);
    assert!(table.rows[40][10].is_nan());
    assert!(table.rows[..40].iter().all(|r| r.iter().all(|v| v.is_finite())));
    let summary = std::fs::read_to_string(dir.path().join("mpc_summary.txt")).unwrap();
    assert!(summary.contains("rms_mpc") && summary.contains("rms_zero_input"));
}

#[test]
fn simulate_trace_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.toml",
        &format!(
            "scenario = \"simulate\"\nhorizon = 50\nseed = 9\n[initial]\nx0 = [0.3, -0.2, 0.1, 0.5]\n[input]\nkind = \"random\"\n[output]\ndir = \"{}\"\n",
            dir.path().join("o").display()
        ),
    );
    let spec = load_config(Path::new(&cfg)).unwrap();
    run_experiment(&spec).unwrap();
    let table = TraceTable::parse(&std::fs::read_to_string(dir.path().join("o/simulate.csv")).unwrap()).unwrap();
    let inputs = table.vectors("u")[..50].to_vec();
    let x0 = Vector::from_vec(vec![0.3, -0.2, 0.1, 0.5]);
    let traj = simulate(&paper_model(), &x0, &inputs).unwrap();
    assert_eq!(table.vectors("x"), traj.states);
    assert!(table.column("xhat1").is_none());
}

#[test]
fn svg_is_deterministic_and_selects_channels() {
    let dir = tempfile::tempdir().unwrap();
    let mut svgs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = fods(&["closedloop", "--out", out.to_str().unwrap(), "--svg", "--horizon", "30"]);
        assert!(status.status.success());
        svgs.push(std::fs::read(out.join("closedloop.svg")).unwrap());
    }
    assert_eq!(svgs[0], svgs[1]);
    let text = String::from_utf8(svgs.remove(0)).unwrap();
    assert!(text.contains(">x1</text>") && text.contains(">xhat1</text>"));
}

#[test]
fn sweep_writes_one_directory_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "coeffs.toml", "scenario = \"coeffs\"\nhorizon = 10\n");
    let b = write(dir.path(), "sep.toml", "scenario = \"verify-separation\"\n[separation]\nblock_order = 4\n");
    let root = dir.path().join("sweep");
    let out = fods(&["sweep", "--config", &a, "--config", &b, "--out", root.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let coeffs = std::fs::read_to_string(root.join("coeffs/coefficients.csv")).unwrap();
    assert!(coeffs.starts_with("channel,j,psi\n"));
    assert_eq!(coeffs.lines().count(), 1 + 4 * 12);
    let report = std::fs::read_to_string(root.join("sep/separation.txt")).unwrap();
    assert!(report.contains("result             : pass"), "{report}");
    assert!(root.join("sep/separation.csv").exists());
}
