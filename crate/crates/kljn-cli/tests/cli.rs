//! Binary-level behavior: exit codes, forced schedules, env overrides,
//! and repeat-run stability.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn kljn(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kljn"));
    cmd.args(args);
    if let Some(dir) = out_dir {
        cmd.arg("--out-dir").arg(dir);
    }
    cmd.output().unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn bad_sample_count_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = kljn(&["noise", "--samples", "1000"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("power of two"));
}

#[test]
fn out_of_range_key_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = "0".repeat(64);
    let out = kljn(&["did", "--alias", "x", "--key-hex", &zeros], Some(dir.path()));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("n-1"));
}

#[test]
fn unwritable_output_exits_with_the_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"file, not a directory").unwrap();
    let out = kljn(
        &["keygen", "--length", "8", "--seed", "11"],
        Some(&blocker.join("sub")),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
}

#[test]
fn quick_verify_passes_fast_and_injection_fails() {
    let started = Instant::now();
    let out = kljn(&["verify", "--quick"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(started.elapsed().as_secs_f64() < 5.0, "quick verify too slow");
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("ok   johnson_levels"));

    let out = kljn(&["verify", "--quick", "--inject-failure"], None);
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("FAIL injected_broken_threshold"));
}

#[test]
fn forced_single_period_yields_one_secure_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = kljn(
        &["exchange", "--beps", "1", "--force-choices", "HL"],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(dir.path().join("exchange.jsonl")).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 1);
    let record: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(record["level"], "Secure");
    assert_eq!(record["secure_bit"], 1);
    assert_eq!(record["alice_choice"], "High");
    assert_eq!(record["bob_choice"], "Low");
}

#[test]
fn nonsense_choice_token_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = kljn(
        &["exchange", "--beps", "1", "--force-choices", "HX"],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn short_key_has_the_matching_hex_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = kljn(&["keygen", "--length", "8", "--seed", "11"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let key: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("key.json")).unwrap())
            .unwrap();
    assert_eq!(key["hex"].as_str().unwrap().len(), 2);
    assert_eq!(key["bits"].as_str().unwrap().len(), 8);
}

#[test]
fn same_flags_twice_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = kljn(
            &["noise", "--seed", "7", "--bandwidth", "500", "--samples", "1024"],
            Some(dir.path()),
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    }
    for name in ["noise.csv", "psd.csv", "normality.json", "realization.csv"] {
        let left = std::fs::read(a.path().join(name)).unwrap();
        let right = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn environment_variables_stand_in_for_flags() {
    let by_flag = tempfile::tempdir().unwrap();
    let by_env = tempfile::tempdir().unwrap();
    let out = kljn(&["keygen", "--length", "16", "--seed", "21"], Some(by_flag.path()));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_kljn"))
        .args(["keygen", "--length", "16"])
        .env("KLJN_SEED", "21")
        .env("KLJN_OUT_DIR", by_env.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert_eq!(
        std::fs::read(by_flag.path().join("key.json")).unwrap(),
        std::fs::read(by_env.path().join("key.json")).unwrap()
    );
}
