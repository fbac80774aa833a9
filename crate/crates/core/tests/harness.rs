use std::process::Command;

use oram3::harness::audit::{
    pattern_digest, run_index_uniformity, run_oracle_replay, run_pattern_audit, sha256_hex,
    stripped_trace, Protocol,
};
use oram3::harness::workload::{generate, pattern_pairs, Workload};
use oram3::harness::ExperimentConfig;
use oram3::{OramError, Request};
use serde_json::Value;

fn oram3() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oram3"));
    c.env_remove("ORAM3_SEED");
    c
}

fn json_stdout(c: &mut Command) -> Value {
    let out = c.output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_reports_a_clean_replay() {
    let v = json_stdout(oram3().args(["verify", "--n", "16", "--ops", "100"]));
    assert_eq!(v["mismatches"], 0);
    assert_eq!(v["guard_fired"], false);
    assert_eq!(v["ops"], 100);
    assert_eq!(v["seed"], 0);
}

#[test]
fn seed_flag_beats_environment_beats_default() {
    let verify = ["verify", "--n", "4", "--ops", "5"];
    assert_eq!(json_stdout(oram3().args(verify))["seed"], 0);
    assert_eq!(
        json_stdout(oram3().args(verify).env("ORAM3_SEED", "17"))["seed"],
        17
    );
    assert_eq!(
        json_stdout(
            oram3()
                .args(verify)
                .args(["--seed", "3"])
                .env("ORAM3_SEED", "17")
        )["seed"],
        3
    );
}

#[test]
fn bad_capacity_fails_with_code_two() {
    let out = oram3()
        .args(["verify", "--n", "12", "--ops", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bench_prints_rows_per_size() {
    let v = json_stdout(oram3().args(["bench", "--sizes", "4,8", "--linear", "8,16"]));
    assert_eq!(v["oram"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["oram"]["rows"][1]["accesses"], 32);
    assert_eq!(v["linear"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn trace_writes_stripped_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let status = oram3()
        .args(["trace", "--n", "4", "--ops", "3", "--strip", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let reqs = generate(Workload::Uniform, 4, 3, 7, 0);
    assert_eq!(text.as_bytes(), stripped_trace(4, 16, &reqs, 0).unwrap());
    for line in text.lines() {
        let e: Value = serde_json::from_str(line).unwrap();
        assert!(e["index"].is_null());
    }
}

#[test]
fn audit_command_emits_its_report() {
    let v = json_stdout(oram3().args(["audit", "--n", "4", "--ops", "8", "--trials", "50"]));
    assert_eq!(v["pattern_equal"], true);
    assert!(v["patterns"].as_array().unwrap().len() >= 10);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn replay_report_is_deterministic_apart_from_timing() {
    let run = || {
        let mut v =
            serde_json::to_value(run_oracle_replay(&ExperimentConfig::new(8, 50, 9))).unwrap();
        v["elapsed_ms"] = Value::Null;
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn no_trials_means_no_results() {
    assert!(run_index_uniformity(Protocol::Otm, 4, 4, 0, 1, false)
        .unwrap()
        .is_empty());
}

#[test]
fn too_many_lookups_are_refused() {
    assert!(matches!(
        run_index_uniformity(Protocol::Otm, 4, 5, 10, 1, false),
        Err(OramError::CapacityExhausted { .. })
    ));
}

#[test]
fn unequal_sequences_cannot_be_compared() {
    let a = [Request::Read(0)];
    let b = [Request::Read(0), Request::Read(1)];
    assert!(matches!(
        run_pattern_audit("x", 4, 16, &a, &b, 0, 0),
        Err(OramError::LengthMismatch { .. })
    ));
}

#[test]
fn digest_is_the_hash_of_the_stripped_trace() {
    let reqs = generate(Workload::Uniform, 8, 6, 7, 3);
    let bytes = stripped_trace(8, 16, &reqs, 3).unwrap();
    let (digest, events) = pattern_digest(8, 16, &reqs, 3).unwrap();
    assert_eq!(sha256_hex(&bytes), digest);
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count() as u64, events);
}

#[test]
fn pattern_pairs_have_equal_lengths_and_patterns() {
    let pairs = pattern_pairs(8, 12, 7, 1);
    assert!(pairs.len() >= 10);
    for (name, a, b) in &pairs {
        assert_eq!(a.len(), b.len(), "{name}");
        let r = run_pattern_audit(name, 8, 16, a, b, 1, 2).unwrap();
        assert!(r.equal && r.seed_invariant, "{name}");
    }
}
