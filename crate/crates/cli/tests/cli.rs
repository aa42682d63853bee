use std::process::Command;

fn taukit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_taukit"));
    c.env_remove("TAUKIT_SEED");
    c
}

#[test]
fn claims_suite_exits_zero() {
    let out = taukit().args(["verify", "--suite", "claims", "--samples", "10000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["summary"]["fail"], 0);
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = taukit().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let out = taukit().args(["experiment", "--experiment", "corollary9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(taukit().args(["verify", "--suite", "claims", "--threads", "0"]).status().unwrap().code(), Some(2));
    assert_eq!(taukit().args(["verify"]).status().unwrap().code(), Some(2));
    assert_eq!(taukit().args(["verify", "--suite", "claims", "--format", "xml"]).status().unwrap().code(), Some(2));
}

#[test]
fn same_config_gives_identical_reports() {
    let run = || {
        let out = taukit()
            .args(["experiment", "--experiment", "lemma4", "--samples", "20000", "--seed", "9"])
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap().lines().filter(|l| !l.contains("wall_time_ms")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(run(), run());
}

#[test]
fn seed_changes_numbers_and_env_sets_default() {
    let est = |cmd: &mut Command| {
        let out = cmd.output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["records"][0]["estimate"].as_f64().unwrap()
    };
    let base = ["experiment", "--experiment", "lemma4", "--samples", "20000", "--t-grid", "0.5"];
    let a = est(taukit().args(base).args(["--seed", "1"]));
    let b = est(taukit().args(base).args(["--seed", "2"]));
    let c = est(taukit().args(base).env("TAUKIT_SEED", "2"));
    assert_ne!(a, b);
    assert_eq!(b, c);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"experiment": "corollary2", "samples": 20000, "dims": [2], "lambda_grid": [1.0, 2.0]}"#).unwrap();
    let out = taukit()
        .args(["experiment", "--config", cfg.to_str().unwrap(), "--lambda-grid", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let recs = v["records"].as_array().unwrap();
    // three test functions, one λ each
    assert_eq!(recs.len(), 3);
    for r in recs {
        assert_eq!(r["estimate"].as_f64().unwrap(), 1.0);
        assert_eq!(r["bound"].as_f64().unwrap(), 1.0);
    }
    assert_eq!(v["config"]["dims"][0], 2);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"suite": "claims", "sample": 5}"#).unwrap();
    let status = taukit().args(["verify", "--config", cfg.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn corollary1_rows_carry_the_bound() {
    let out = taukit()
        .args(["experiment", "--experiment", "corollary1", "--dims", "10", "--t-grid", "1,2,4,8", "--samples", "20000"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 4);
    for r in recs {
        let t = r["param"].as_f64().unwrap();
        assert!((r["bound"].as_f64().unwrap() - 2.0 * (-t).exp()).abs() < 1e-15);
    }
}

#[test]
fn csv_output_to_file_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let status = taukit()
        .args(["experiment", "--experiment", "lemma4", "--samples", "20000", "--format", "csv", "--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "suite,case_id,param,estimate,std_error,bound,slack,exact,verdict,wall_time_ms");
    assert_eq!(text.lines().count(), 6);

    taukit().args(["experiment", "--experiment", "lemma4", "--samples", "20000", "--out"]).arg(&json).status().unwrap();
    let out = taukit().args(["report", "--input"]).arg(&json).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let strip = |s: &str| s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(&String::from_utf8(out.stdout).unwrap()), strip(&text));
    // no temporary files left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn failed_run_writes_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let status = taukit().args(["verify", "--suite", "bogus", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn negative_lambda_values_parse() {
    let out = taukit()
        .args(["experiment", "--experiment", "corollary2", "--dims", "2", "--lambda-grid", "-1,1", "--samples", "20000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"][0]["param"].as_f64().unwrap(), -1.0);
}
