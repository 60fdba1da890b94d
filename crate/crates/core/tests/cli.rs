use std::process::Command;

use serde_json::Value;

fn warpcheck() -> Command {
    Command::new(env!("CARGO_BIN_EXE_warpcheck"))
}

#[test]
fn config_file_round_trip_and_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpcheck().args(["config", "CFG-A"]).output().unwrap();
    assert!(out.status.success());
    let cfg_path = dir.path().join("cfg-a.json");
    std::fs::write(&cfg_path, &out.stdout).unwrap();

    let report_path = dir.path().join("report.json");
    let status = warpcheck()
        .args(["verify", "--config"])
        .arg(&cfg_path)
        .args([
            "--case",
            "connection,inclusion-b",
            "--samples",
            "10",
            "--format",
            "json",
            "--report",
        ])
        .arg(&report_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["samples"], 10);
    assert_eq!(report["exit_code"], 0);
    let cases = report["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 2);
    for case in cases {
        let verdict = case["verdict"].as_str().unwrap();
        assert!(verdict == "match" || verdict == "corrected-match", "{case}");
    }
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, r#"{"B": {"dim": 1}}"#).unwrap();
    let out = warpcheck().args(["verify", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_builtin_is_an_error() {
    let out = warpcheck().args(["config", "CFG-Z"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
