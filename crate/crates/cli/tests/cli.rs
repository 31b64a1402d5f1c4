//! CLI surface behavior: exit codes, diagnostics, file formats.

use std::process::Command;

fn trex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trex"))
}

#[test]
fn missing_scenario_fails_with_diagnostic() {
    let out = trex()
        .args([
            "run",
            "--scenario",
            "/nonexistent/net.json",
            "--out",
            "/tmp/ignored",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("loading scenario"), "{stderr}");
}

#[test]
fn missing_checkpoint_fails_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = trex_core::netmodel::grid_scenario(1, 1, 150.0, 1, 13.89, 300.0).unwrap();
    let path = tmp.path().join("g.json");
    std::fs::write(&path, trex_core::netmodel::save_scenario(&scenario)).unwrap();
    let out = trex()
        .args([
            "eval",
            "--scenario",
            path.to_str().unwrap(),
            "--checkpoint",
            "/nonexistent/ckpt.json",
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("checkpoint"), "{stderr}");
}

#[test]
fn qlearn_under_run_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = trex_core::netmodel::grid_scenario(1, 1, 150.0, 1, 13.89, 300.0).unwrap();
    let path = tmp.path().join("g.json");
    std::fs::write(&path, trex_core::netmodel::save_scenario(&scenario)).unwrap();
    let out = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--controller",
            "qlearn",
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn invalid_scenario_json_reports_parse_context() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("broken.json");
    std::fs::write(&path, "{ \"id\": ").unwrap();
    let out = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn metrics_subcommand_reads_curve_and_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = tmp.path().join("curve.csv");
    std::fs::write(&curve, "episode,indicator\n0,100.0\n1,90.0\n2,80.0\n").unwrap();
    let baseline = tmp.path().join("base.csv");
    std::fs::write(&baseline, "episode,indicator\n0,100.0\n1,100.0\n2,100.0\n").unwrap();
    let report_path = tmp.path().join("report.json");
    let out = trex()
        .args([
            "metrics",
            "--curve",
            curve.to_str().unwrap(),
            "--baseline",
            baseline.to_str().unwrap(),
            "--epsilon",
            "0.05",
            "--out",
            report_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["points"], 3);
    assert!((report["lsi"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((report["auc"].as_f64().unwrap() - 180.0).abs() < 1e-9);
    // Base area 200, perturbed 180: RAUC = -0.1.
    assert!((report["rauc"].as_f64().unwrap() + 0.1).abs() < 1e-9);
}

#[test]
fn gen_output_round_trips_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("g.json");
    let out = trex()
        .args([
            "gen",
            "grid",
            "--rows",
            "1",
            "--cols",
            "2",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let run = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--seeds",
            "3",
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let csv = std::fs::read_to_string(tmp.path().join("o/episodes.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}

#[test]
fn training_curve_feeds_metrics_without_transformation() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = trex_core::netmodel::grid_scenario(1, 1, 150.0, 1, 13.89, 300.0).unwrap();
    let path = tmp.path().join("g.json");
    std::fs::write(&path, trex_core::netmodel::save_scenario(&scenario)).unwrap();
    let train_out = tmp.path().join("t");
    let out = trex()
        .args([
            "train",
            "--scenario",
            path.to_str().unwrap(),
            "--seeds",
            "1",
            "--episodes",
            "12",
            "--out",
            train_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report_path = tmp.path().join("report.json");
    let metrics = trex()
        .args([
            "metrics",
            "--curve",
            train_out.join("curve_s1.csv").to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        metrics.status.success(),
        "{}",
        String::from_utf8_lossy(&metrics.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["points"], 12);
    assert!(report["lsi"].as_f64().unwrap() >= 0.0);
}

#[test]
fn trace_flag_writes_step_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = trex_core::netmodel::corridor_scenario(2, 200.0, 1, 10.0, 300.0).unwrap();
    let path = tmp.path().join("c.json");
    std::fs::write(&path, trex_core::netmodel::save_scenario(&scenario)).unwrap();
    let out_dir = tmp.path().join("o");
    let out = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--seeds",
            "1",
            "--trace",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let trace = std::fs::read_to_string(out_dir.join("trace_s1_e0.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 3600);
    assert!(trace.contains("insertion"));
}

#[test]
fn incident_file_argument_drives_fixed_incidents() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = trex_core::netmodel::corridor_scenario(3, 300.0, 1, 10.0, 600.0).unwrap();
    let path = tmp.path().join("c.json");
    std::fs::write(&path, trex_core::netmodel::save_scenario(&scenario)).unwrap();
    let incidents = tmp.path().join("incidents.json");
    std::fs::write(
        &incidents,
        r#"[{"edge": "e1", "position_m": 150.0, "lanes_blocked": 1, "start_s": 400.0, "duration_s": 900.0}]"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--seeds",
            "1",
            "--incidents",
            incidents.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let drawn = &manifest["drawn_incidents"]["1"][0][0];
    assert_eq!(drawn["edge"], "e1");
    assert_eq!(drawn["start_s"], 400);
    // A referenced edge that does not exist is rejected.
    std::fs::write(
        &incidents,
        r#"[{"edge": "nope", "position_m": 150.0, "lanes_blocked": 1, "start_s": 400.0, "duration_s": 900.0}]"#,
    )
    .unwrap();
    let bad = trex()
        .args([
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--incidents",
            incidents.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown edge"));
}
