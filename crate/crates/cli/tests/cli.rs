//! End-to-end runs of the `gnss-lasso` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnss-lasso"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gnss-lasso-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_an_eleven_tap_snapshot() {
    let text = String::from_utf8(ok(&["simulate", "--seed", "4"])).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("11,1,0.1,25000000,0.001,1,"));
}

#[test]
fn noiseless_snapshot_ignores_the_seed() {
    let a = ok(&["simulate", "--noiseless", "--seed", "1"]);
    let b = ok(&["simulate", "--noiseless", "--seed", "2"]);
    assert_eq!(a, b);
    let c = ok(&["simulate", "--seed", "1"]);
    let d = ok(&["simulate", "--seed", "2"]);
    assert_ne!(c, d);
}

#[test]
fn detect_reports_a_clean_snapshot_as_clean() {
    let dir = scratch("clean");
    let config = dir.join("clean.toml");
    std::fs::write(&config, "[signal.spoofer]\nenabled = false\n").unwrap();
    let snap = dir.join("clean.csv");
    ok(&["simulate", "--noiseless", "--config", path(&config), "--out", path(&snap)]);
    let report = String::from_utf8(ok(&["detect", path(&snap)])).unwrap();
    assert!(report.contains("\"verdict\": \"clean\""), "{report}");
}

#[test]
fn detect_output_has_the_report_fields() {
    let dir = scratch("fields");
    let snap = dir.join("s.csv");
    ok(&["simulate", "--seed", "3", "--out", path(&snap)]);
    for fp in ["1", "5"] {
        let report = String::from_utf8(ok(&["detect", path(&snap), "--fp", fp])).unwrap();
        for key in ["candidates", "verdict", "threshold_frac", "normalization", "tap_index", "fine_delay"] {
            assert!(report.contains(&format!("\"{key}\"")), "missing {key}: {report}");
        }
    }
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = scratch("codes");
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[correlator]\nspacing = 0.3\n").unwrap();
    assert_eq!(run(&["simulate", "--config", path(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["der", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["der", "--threshold", "0"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let truncated = dir.join("truncated.csv");
    std::fs::write(&truncated, "11,1,0.1,25000000,0.001,1,x\n-0.5,0.1,0.0\n-0.4,0.2\n").unwrap();
    let out = run(&["detect", path(&truncated)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(run(&["detect", path(&dir.join("missing.csv"))]).status.code(), Some(4));
    assert_eq!(run(&["simulate", "--config", path(&dir.join("missing.toml"))]).status.code(), Some(4));
    let unwritable = dir.join("no-such-dir").join("out.csv");
    assert_eq!(run(&["simulate", "--out", path(&unwritable)]).status.code(), Some(4));

    // One sweep cannot certify a near-unregularized problem to this tolerance.
    let snap = dir.join("s.csv");
    ok(&["simulate", "--out", path(&snap)]);
    let tight = dir.join("tight.toml");
    std::fs::write(&tight, "[solver]\nmax_sweeps = 1\ntol = 1e-15\nlambda = 1e-4\n").unwrap();
    assert_eq!(run(&["detect", path(&snap), "--config", path(&tight)]).status.code(), Some(3));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = scratch("dump");
    let dumped = dir.join("effective.toml");
    let a = ok(&[
        "der",
        "--seed",
        "21",
        "--fp",
        "5",
        "--trials",
        "6",
        "--dump-config",
        path(&dumped),
    ]);
    let b = ok(&["der", "--config", path(&dumped)]);
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("power_db,length_ms,Fp,delay_policy,trials,misses,der"));
    assert_eq!(text.lines().count(), 1 + 15);
}

#[test]
fn same_seed_gives_identical_csv() {
    let a = ok(&["pfa", "--seed", "5", "--trials", "8", "--jobs", "1"]);
    let b = ok(&["pfa", "--seed", "5", "--trials", "8", "--jobs", "3"]);
    assert_eq!(a, b);
    let c = ok(&["pfa", "--seed", "6", "--trials", "8"]);
    assert_eq!(String::from_utf8(c).unwrap().lines().count(), 6);
}

#[test]
fn dictionary_export_round_trips() {
    let text = String::from_utf8(ok(&["dict-export", "--fp", "5"])).unwrap();
    let dict: gnss_lasso::Dictionary64 = gnss_lasso::read_dictionary_csv(text.as_bytes()).unwrap();
    assert_eq!(dict.matrix.dim(), (11, 55));
    let expected: gnss_lasso::Dictionary64 =
        gnss_lasso::dictionary_for(&gnss_lasso::CorrelatorConfig::nominal(), 5).unwrap();
    assert_eq!(dict, expected);
}
