//! End-to-end tests against the built binary: parsing, exit codes, output
//! determinism, and the sweep -> analyze pipeline.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fathom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fathom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

#[test]
fn factorize_defaults_and_output() {
    let out = fathom(&["factorize", "--n", "15"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["requested_n"], 15);
    assert_eq!(value["halvings"], 0);
    assert_eq!(value["corrected_m"], 15);
    assert_eq!(value["candidates"][0]["factor"], 3);
    assert_eq!(value["candidates"][0]["verified"], true);
    assert_eq!(value["suspect_miscorrection"], false);
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = fathom(&["factorize"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--n"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = fathom(&["factorize", "--n", "15", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn domain_error_maps_to_exit_2_with_module_message() {
    let out = fathom(&["factorize", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr(&out).trim(), "n < 2");
}

#[test]
fn factorize_is_deterministic_per_seed() {
    let args = [
        "factorize",
        "--n",
        "105",
        "--epsilon-lambda",
        "0.005",
        "--epsilon-c",
        "0.001",
        "--draw",
        "random",
        "--seed",
        "7",
    ];
    let a = fathom(&args);
    let b = fathom(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same argv and seed must match bytes");

    let mut other = args;
    other[other.len() - 1] = "8";
    let c = fathom(&other);
    assert!(c.status.success());
    assert_ne!(a.stdout, c.stdout, "a different seed should perturb output");
}

#[test]
fn sweep_then_analyze_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path: PathBuf = dir.path().join("sweep.csv");
    let sweep = fathom(&[
        "sweep",
        "--from",
        "3",
        "--to",
        "255",
        "--step",
        "2",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(sweep.status.success(), "{}", stderr(&sweep));
    assert!(stdout(&sweep).contains("dominant: precision"));

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("n,bits,halvings,time,space,precision,factor,verified\n"));
    assert_eq!(text.lines().count(), 1 + 127); // header + odd 3..=255

    let analyze = fathom(&["analyze", "--in", csv_path.to_str().unwrap()]);
    assert!(analyze.status.success(), "{}", stderr(&analyze));
    let report = stdout(&analyze);
    assert!(report.contains("time: poly:2"), "{report}");
    assert!(report.contains("space: const"), "{report}");
    assert!(report.contains("precision: exp"), "{report}");
    assert!(
        report.contains("dominant: precision; overall: exp"),
        "{report}"
    );

    // double-run determinism of the written artifact
    let csv_path_2: PathBuf = dir.path().join("sweep2.csv");
    let again = fathom(&[
        "sweep",
        "--from",
        "3",
        "--to",
        "255",
        "--step",
        "2",
        "--out",
        csv_path_2.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(&csv_path).unwrap(),
        std::fs::read(&csv_path_2).unwrap()
    );
}

#[test]
fn sweep_rejects_even_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bad.csv");
    let out = fathom(&[
        "sweep",
        "--from",
        "4",
        "--to",
        "10",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("sweep.json");
    let out = fathom(&[
        "sweep",
        "--from",
        "3",
        "--to",
        "31",
        "--out",
        json_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&json_path).unwrap();
    let outcomes: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(outcomes.as_array().unwrap().len(), 15);
    assert_eq!(outcomes[6]["requested_n"], 15);
    assert_eq!(outcomes[6]["candidates"][0]["factor"], 3);
}

#[test]
fn protocol_writes_ledger_and_prints_vector() {
    let dir = tempfile::tempdir().unwrap();
    let ledger_path = dir.path().join("trace.json");
    let out = fathom(&[
        "protocol",
        "--modulus-bits",
        "24",
        "--message",
        "4242",
        "--seed",
        "5",
        "--out",
        ledger_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("decrypt(encrypt(4242)) = 4242"), "{report}");
    assert!(report.contains("flag=interacting"), "{report}");
    assert!(report.contains("information_millibits="), "{report}");

    let text = std::fs::read_to_string(&ledger_path).unwrap();
    let events: serde_json::Value = serde_json::from_str(&text).unwrap();
    let names: Vec<&str> = events
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["subprocess"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "keygen",
            "send_public_key",
            "encrypt",
            "send_ciphertext",
            "decrypt"
        ]
    );

    // deterministic per seed
    let ledger_path_2 = dir.path().join("trace2.json");
    let again = fathom(&[
        "protocol",
        "--modulus-bits",
        "24",
        "--message",
        "4242",
        "--seed",
        "5",
        "--out",
        ledger_path_2.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(
        std::fs::read(&ledger_path).unwrap(),
        std::fs::read(&ledger_path_2).unwrap()
    );
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn protocol_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    let out = fathom(&[
        "protocol",
        "--modulus-bits",
        "65",
        "--message",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("toy scale only"), "{}", stderr(&out));
}

#[test]
fn json_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let sweep = fathom(&[
        "--json",
        "sweep",
        "--from",
        "3",
        "--to",
        "127",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(sweep.status.success(), "{}", stderr(&sweep));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&sweep)).unwrap();
    assert_eq!(summary["dominant"][0], "precision");

    let analyze = fathom(&["--json", "analyze", "--in", csv_path.to_str().unwrap()]);
    assert!(analyze.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&analyze)).unwrap();
    assert_eq!(summary["overall"], "exp");
    assert_eq!(summary["growth"]["time"], "poly:2");
    assert_eq!(summary["growth"]["space"], "const");
}
