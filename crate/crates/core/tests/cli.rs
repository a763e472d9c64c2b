use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swipt-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("swipt-cli-{}-{name}", std::process::id()))
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 4] = ["--n_secondary", "6", "--slots", "50"];

#[test]
fn simulate_writes_one_row() {
    let out = run(&[&["simulate"], &SMALL[..], &["--scheme", "fourth"]].concat());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("alpha,scheme,primary_rate_mean"));
    assert!(lines[1].starts_with("5e-1,fourth,"));
}

#[test]
fn sweep_writes_grid_to_file() {
    let path = temp_path("sweep.csv");
    let out = run(&[
        &["sweep"],
        &SMALL[..],
        &[
            "--alpha-grid",
            "0.1:0.3:0.1",
            "--schemes",
            "third,first",
            "--output",
            path.to_str().unwrap(),
        ],
    ]
    .concat());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let labels: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(labels.len(), 9);
    assert_eq!(&labels[..3], ["first", "third", "pt_alone"]);
}

#[test]
fn flags_override_file() {
    let path = temp_path("override.cfg");
    std::fs::write(&path, "slots = 4000 # long\nn_secondary = 6\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--slots",
        "20",
    ]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(run(&["simulate", "--alpha", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--bogus", "1"]).status.code(), Some(1));
    assert_eq!(
        run(&["sweep", "--alpha-grid", "0.1:x"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["sweep", "--schemes", "sixth"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));

    let path = temp_path("unknown.cfg");
    std::fs::write(&path, "frequency = 2.4e9\n").unwrap();
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frequency"));
}

#[test]
fn io_errors_exit_two() {
    let missing = temp_path("does-not-exist.cfg");
    assert_eq!(
        run(&["simulate", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let out = run(&[
        &["simulate"],
        &SMALL[..],
        &["--output", "/nonexistent-dir/out.csv"],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_checks() {
    let out = run(&["validate", "--slots", "30"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all checks passed"));

    let out = run(&["validate", "--slots", "30", "--paper_literal_r", "true"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("expected"));

    let out = run(&["validate", "--n_secondary", "4", "--k_r", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_r"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["sweep", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("--alpha-grid"));
}
