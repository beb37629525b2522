//! Black-box tests of the command-line interface: exit codes, CSV shape,
//! byte-identical reruns, and config-file merging.

use std::process::{Command, Output};

fn qkdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdlab"))
        .args(args)
        .env_remove("QKDLAB_CONFIG")
        .output()
        .expect("failed to spawn qkdlab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn rate_noiseless_perfect_channel_is_one() {
    let out = qkdlab(&[
        "rate",
        "--protocol",
        "bb84",
        "--mode",
        "asym",
        "--disturbance",
        "0",
        "--noise",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["result"]["breakdown"]["rate"], 1.0);
    // the resolved configuration is echoed for reproducibility
    assert_eq!(v["config"]["epsilon"], 1e-9);
}

#[test]
fn rate_out_of_domain_is_usage_error() {
    let out = qkdlab(&["rate", "--protocol", "bb84", "--disturbance", "0.6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.6"));
}

#[test]
fn missing_channel_flag_is_usage_error() {
    let out = qkdlab(&["rate", "--protocol", "bb84"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn disturbance_and_qber_are_mutually_exclusive() {
    let out = qkdlab(&[
        "rate",
        "--protocol",
        "bb84",
        "--disturbance",
        "0.05",
        "--qber",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = qkdlab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_point_exits_two() {
    let out = qkdlab(&["n0", "--protocol", "bb84", "--disturbance", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_zero_length_range_gives_header_only() {
    let out = qkdlab(&[
        "sweep",
        "--kind",
        "n0-vs-d",
        "--protocol",
        "bb84",
        "--d-range",
        "0.1:0.05:0.01",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "protocol,scenario,D,p,Q,N,m,eps_bar,eps_PE,eps_EC,eps_PA,SXE,HXY,zeta,aep,pa_corr,rate,status\n"
    );
}

#[test]
fn sweep_unwritable_output_exits_three() {
    let out = qkdlab(&[
        "sweep",
        "--kind",
        "n0-vs-d",
        "--protocol",
        "bb84",
        "--d-range",
        "0.1:0.05:0.01",
        "--output",
        "/nonexistent-qkdlab-dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let args = [
        "sweep",
        "--kind",
        "r-vs-n",
        "--protocol",
        "six-state",
        "--disturbance",
        "0.05",
        "--n-range",
        "1e5:1e8:100",
    ];
    let a = qkdlab(&args);
    let b = qkdlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("protocol,scenario,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2, "expected rows for N = 1e5 and 1e7:\n{text}");
    for row in rows {
        assert_eq!(row.split(',').count(), 18);
        assert!(row.ends_with(",ok"), "unexpected status in {row}");
    }
}

#[test]
fn config_file_fills_missing_flags_and_flags_win() {
    let dir = std::env::temp_dir().join("qkdlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.txt");
    std::fs::write(&cfg, "protocol=six-state\nmode=asym\ndisturbance=0.05\n").unwrap();

    let from_file = qkdlab(&["--config", cfg.to_str().unwrap(), "rate"]);
    assert_eq!(from_file.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(v["config"]["protocol"], "six-state");
    assert_eq!(v["config"]["disturbance"], 0.05);

    // an explicit flag overrides the file value
    let overridden = qkdlab(&[
        "--config",
        cfg.to_str().unwrap(),
        "rate",
        "--disturbance",
        "0.1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&overridden)).unwrap();
    assert_eq!(v["config"]["disturbance"], 0.1);

    // the same file also works through the environment variable
    let via_env = Command::new(env!("CARGO_BIN_EXE_qkdlab"))
        .args(["rate"])
        .env("QKDLAB_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(via_env.status.code(), Some(0));
}

#[test]
fn json_config_file_is_accepted() {
    let dir = std::env::temp_dir().join("qkdlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        "{\"protocol\": \"bb84\", \"mode\": \"asym\", \"disturbance\": 0.05}",
    )
    .unwrap();
    let out = qkdlab(&["--config", cfg.to_str().unwrap(), "rate"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["protocol"], "bb84");
}

#[test]
fn verify_passes_and_self_test_detects_injected_fault() {
    let ok = qkdlab(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let text = stdout(&ok);
    assert_eq!(text.matches("PASS").count(), 7, "{text}");
    assert!(!text.contains("FAIL"));

    let st = qkdlab(&["verify", "--self-test"]);
    assert_eq!(st.status.code(), Some(0), "{}", stdout(&st));
    let text = stdout(&st);
    assert!(text.contains("FAIL"), "{text}");
    assert!(text.contains("self-test OK"), "{text}");
}

#[test]
fn threshold_reports_known_value() {
    let out = qkdlab(&["threshold", "--protocol", "bb84"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t = v["result"]["threshold"].as_f64().unwrap();
    assert!((t - 0.110).abs() < 0.002, "threshold {t}");
}
