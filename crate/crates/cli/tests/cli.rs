use std::process::{Command, Output};

use serde_json::Value;

fn mdkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdkit")).args(args).env_remove("MDKIT_SEED").output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn tower_verify_example_passes() {
    let out = mdkit(&["tower", "verify", "--m", "3", "--N", "1", "--delta", "1/2", "--window", "0:36", "--samples", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["summary"]["verdict"], "pass");
    assert!(String::from_utf8_lossy(&out.stderr).contains("tower verify: pass"));
}

#[test]
fn default_tower_window_reaches_every_block_case() {
    let out = mdkit(&["tower", "verify", "--m", "3", "--samples", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let cases = report(&out)["result"]["case_counts"].as_object().unwrap().clone();
    assert_eq!(cases.len(), 3, "{cases:?}");
    assert!(cases.values().all(|v| v.as_u64().unwrap() > 0));
}

#[test]
fn marker_absence_is_a_pass() {
    let out = mdkit(&["markers", "search", "--system", "cycles:5", "--N", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["verdict"], "none");
}

#[test]
fn marker_found_on_long_cycles() {
    let out = mdkit(&["markers", "search", "--system", "cycles:5,7", "--N", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["verdict"], "found");
    assert!(!r["result"]["certificate"]["u"].as_array().unwrap().is_empty());
}

#[test]
fn marker_transfer_counts_backward_markers() {
    let out = mdkit(&["markers", "transfer", "--system", "cycles:5", "--n", "3", "--N", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["backward_markers"], 15);
}

#[test]
fn periodic_counts_of_the_triple_free_shift() {
    let out = mdkit(&["shift", "count-periodic", "--n-max", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let counts: Vec<String> = report(&out)["result"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["count"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(counts, ["0", "2", "6", "6", "10", "20"]);
}

#[test]
fn conjugacy_and_witness_pass() {
    assert_eq!(mdkit(&["shift", "conjugacy", "--p", "5", "--m", "2", "--samples", "5"]).status.code(), Some(0));
    let out = mdkit(&["shift", "witness", "--p", "7", "--m", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["witness"]["period"], 7);
}

#[test]
fn tower_aperiodicity_defaults_pass() {
    let out = mdkit(&["tower", "aperiodicity"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["certificates"].as_array().unwrap().len(), 6);
}

#[test]
fn complex_commands() {
    let out = mdkit(&["complex", "en-zp", "--p", "3", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["vertices"], 9);
    let out = mdkit(&["complex", "coindex", "--complex", "en-zp:p=3,n=2"]);
    assert_eq!(out.status.code(), Some(0));
    let b = &report(&out)["result"]["bound"];
    assert_eq!((b["lower"].as_i64(), b["upper"].as_i64()), (Some(2), Some(2)));
}

#[test]
fn embed_with_uniform_metric() {
    let out = mdkit(&["embed", "--system", "cycles:3", "--uniform-metric", "1/2", "--epsilon", "1/4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["N"], 3);
}

#[test]
fn embed_rejects_fixed_points() {
    let out = mdkit(&["embed", "--system", "cycles:1,3", "--uniform-metric", "1/2", "--epsilon", "1/4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn d_of_the_two_star_cover() {
    for name in ["D", "d"] {
        let out = mdkit(&["mdim", name, "--lattice", "interval", "--cover", "[[0,1],[1,2]]"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(report(&out)["result"]["D"]["upper"], 1);
    }
}

#[test]
fn exhausted_d_search_exits_one() {
    let out = mdkit(&["mdim", "D", "--cover", "[[0,1],[1,2]]", "--cap", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["summary"]["verdict"], "fail");
}

#[test]
fn pipeline_with_explicit_division() {
    let out = mdkit(&["mdim", "pipeline", "--N", "3", "--time-division", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let b = &report(&out)["result"]["bound"];
    assert_eq!((b["lower"].as_str(), b["upper"].as_str()), (Some("0/1"), Some("3/4")));
}

#[test]
fn pipeline_picks_division_from_eta() {
    let out = mdkit(&["mdim", "pipeline", "--N", "3", "--eta", "1/2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["n"], 7);
    assert_eq!(r["result"]["bound"]["upper"], "3/7");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mdkit(&["bogus"]).status.code(), Some(2));
    assert_eq!(mdkit(&["tower", "verify"]).status.code(), Some(2));
    assert_eq!(mdkit(&["tower", "verify", "--m", "3", "--delta", "x"]).status.code(), Some(2));
    assert_eq!(mdkit(&["mdim", "pipeline", "--N", "3"]).status.code(), Some(2));
    assert_eq!(mdkit(&["markers", "search", "--system", "missing.json", "--N", "2"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["tower", "verify", "--m", "3", "--samples", "10", "--seed", "11"];
    assert_eq!(mdkit(&args).stdout, mdkit(&args).stdout);
    let args = ["shift", "conjugacy", "--p", "7", "--m", "3", "--samples", "4", "--seed", "3"];
    assert_eq!(mdkit(&args).stdout, mdkit(&args).stdout);
}

#[test]
fn seed_can_come_from_the_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mdkit"));
        cmd.args(["tower", "verify", "--m", "2", "--samples", "3"]).env_remove("MDKIT_SEED");
        if let Some(v) = env {
            cmd.env("MDKIT_SEED", v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        let out = cmd.output().unwrap();
        report(&out)["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("42"), None), 42);
    assert_eq!(run(Some("42"), Some("5")), 5);
}
