use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kseq"))
        .args(args)
        .env_remove("KSEQ_CONFIG")
        .current_dir(env!("CARGO_TARGET_TMPDIR"))
        .output()
        .expect("spawn kseq")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

/// Drops run-dependent fields so artifacts compare byte for byte.
fn normalized(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_seconds");
    v
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check_golden(name: &str, args: &[&str]) {
    let out = kseq(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let actual = serde_json::to_string_pretty(&normalized(json_of(&out))).unwrap() + "\n";
    let path = golden_dir().join(format!("{name}.json"));
    if std::env::var_os("KSEQ_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, &actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden file; rerun with KSEQ_UPDATE_GOLDEN=1 if intended");
}

#[test]
fn golden_count_with_oracle() {
    check_golden("count_oracle", &["count", "--k", "3", "--r", "2", "--b", "1", "--n", "30", "--oracle"]);
}

#[test]
fn golden_identities() {
    check_golden("identities", &["identities", "--nmax", "60"]);
}

#[test]
fn golden_gk_eval() {
    check_golden("gk_eval", &["gk-eval", "--k", "3", "--s", "0.2"]);
}

#[test]
fn golden_simulate() {
    check_golden("simulate", &["--seed", "7", "simulate", "--k", "2", "--s", "0.4", "--trials", "20000"]);
}

#[test]
fn golden_verify_all_quick() {
    check_golden("verify_all_quick", &["verify-all", "--quick"]);
}

#[test]
fn reruns_reproduce_the_result() {
    for args in [
        &["--seed", "3", "simulate", "--k", "3", "--s", "0.25", "--trials", "50000"][..],
        &["spectrum", "--k", "4", "--s", "0.05", "--n", "1,10,100"][..],
        &["fit-conjecture", "--points", "4"][..],
    ] {
        let a = normalized(json_of(&kseq(args)));
        let b = normalized(json_of(&kseq(args)));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn seed_changes_the_estimate() {
    let run = |seed: &str| json_of(&kseq(&["--seed", seed, "simulate", "--trials", "20000"]))["result"]["estimate"].clone();
    assert_ne!(run("1"), run("2"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["count", "--k", "1"][..],
        &["count", "--r", "zero"][..],
        &["count", "--oracle", "--n", "200"][..],
        &["--precision", "2", "gk-eval"][..],
        &["--tol", "0", "gk-eval"][..],
        &["identities", "--name", "no_such_identity"][..],
        &["runup", "--k", "2", "--a", "5"][..],
        &["not-a-command"][..],
        &["--config", "/nonexistent/kseq.json", "count"][..],
    ] {
        let out = kseq(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
    }
}

#[test]
fn failed_checks_exit_with_one() {
    // Ten coefficients cannot bound the tail at s = 0.5 to 1e-30.
    let out = kseq(&["series", "--k", "2", "--nmax", "10", "--s", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["pass"], false);
}

#[test]
fn series_routes_agree() {
    let v = json_of(&kseq(&["series", "--k", "3", "--nmax", "60"]));
    assert_eq!(v["pass"], true);
    assert!(v["result"]["transfer_first_difference"].is_null());
    assert_eq!(v["result"]["coefficients"].as_array().unwrap().len(), 61);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"precision": 30, "seed": 11, "tol": 1e-20}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let v = json_of(&kseq(&["--config", cfg, "gk-eval"]));
    assert_eq!(v["config"]["precision"], 30);
    assert_eq!(v["config"]["seed"], 11);

    let v = json_of(&kseq(&["--config", cfg, "--precision", "40", "gk-eval"]));
    assert_eq!(v["config"]["precision"], 40);
    assert_eq!(v["config"]["seed"], 11);

    let out = Command::new(env!("CARGO_BIN_EXE_kseq"))
        .args(["gk-eval"])
        .env("KSEQ_CONFIG", cfg)
        .output()
        .unwrap();
    assert_eq!(json_of(&out)["config"]["tol"], 1e-20);
}

#[test]
fn bad_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"digits": 30}"#).unwrap();
    let out = kseq(&["--config", cfg.to_str().unwrap(), "count"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_gets_json_csv_and_junit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = kseq(&["--out", d, "--format", "csv", "identities", "--nmax", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("identities.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["command"], "identities");

    let csv = fs::read_to_string(dir.path().join("identities.csv")).unwrap();
    assert!(csv.starts_with("# schema_version: 1\n"));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["name", "n_max", "pass", "first_discrepancy"]);
    assert_eq!(reader.records().count(), 5);

    let junit = fs::read_to_string(dir.path().join("identities.junit.xml")).unwrap();
    assert!(junit.contains("<testsuite"));
}

#[test]
fn csv_to_stdout_has_provenance() {
    let out = kseq(&["--format", "csv", "count", "--k", "2", "--n", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.iter().any(|l| l.starts_with("# config: ")));
    assert!(lines.contains(&"n,count"));
    assert_eq!(lines.last(), Some(&"5,4"));
}

#[test]
fn every_artifact_has_the_envelope() {
    for args in [
        &["count", "--n", "5"][..],
        &["transition", "--k", "2", "--s", "0.2", "--n", "3", "--to", "50"][..],
        &["runup", "--k", "3", "--s", "0.2", "--n", "6"][..],
        &["fgk", "--k", "2", "--s", "1.0"][..],
        &["asymptotics", "--k", "3", "--s", "0.1", "--n", "50"][..],
    ] {
        let v = json_of(&kseq(args));
        for key in ["schema_version", "tool", "version", "command", "config", "arguments", "wall_seconds", "pass", "result"] {
            assert!(v.get(key).is_some(), "{args:?} lacks {key}");
        }
    }
}

#[test]
fn identities_to_three_hundred_all_pass() {
    let out = kseq(&["identities", "--nmax", "300"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let ids = v["result"]["identities"].as_array().unwrap();
    assert_eq!(ids.len(), 5);
    assert!(ids.iter().all(|r| r["pass"] == true && r["n_max"] == 300));
}

#[test]
fn count_oracle_at_forty() {
    let out = kseq(&["count", "--k", "2", "--n", "40", "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["result"]["mismatches"].as_array().unwrap().len(), 0);
    assert_eq!(v["result"]["counts"].as_array().unwrap().len(), 41);
}

#[test]
fn global_flags_work_after_the_subcommand() {
    let v = json_of(&kseq(&["gk-eval", "--k", "2", "--precision", "40", "--tol", "1e-20"]));
    assert_eq!(v["config"]["precision"], 40);
    assert_eq!(v["config"]["tol"], 1e-20);
}
