use std::path::Path;
use std::process::{Command, Output};

fn percal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percal"))
        .args(args)
        .env_remove("PERCAL_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn study() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/synthetic_study.jsonl")
        .to_string_lossy()
        .into_owned()
}

#[test]
fn encode_prints_bin_index() {
    let o = percal(&["encode", "--param", "vfov", "--value", "1.0"]);
    assert_eq!(stdout(&o).trim(), "128");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(percal(&[]).status.code(), Some(2));
    assert_eq!(percal(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let o = percal(&[
        "retrieve-query",
        "--index",
        "/nonexistent/index.jsonl",
        "--image-id",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn zero_error_query_is_imperceptible() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.csv");
    std::fs::write(
        &q,
        "pitch_value,pitch_error,roll_value_deg,roll_error_deg,vfov_value_deg,vfov_error_deg\n\
         0.1,0,2,0,60,0\n\
         0.1,0.6,2,30,60,40\n",
    )
    .unwrap();
    let out = stdout(&percal(&[
        "score",
        "--records",
        &study(),
        "--queries",
        q.to_str().unwrap(),
    ]));
    let scores: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 2);
    assert!(scores[0] < 10.0, "{scores:?}");
    assert!(scores[1] > scores[0] + 50.0, "{scores:?}");
}

#[test]
fn sampled_distortions_repeat_with_seed() {
    let a = stdout(&percal(&[
        "sample-distortion",
        "--count",
        "5",
        "--seed",
        "3",
        "--active",
        "pitch,roll",
    ]));
    let b = stdout(&percal(&[
        "sample-distortion",
        "--count",
        "5",
        "--seed",
        "3",
        "--active",
        "pitch,roll",
    ]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn insert_point_below_horizon() {
    let o = percal(&[
        "insert-point",
        "--vfov",
        "60",
        "--pitch",
        "0",
        "--roll",
        "0",
        "--width",
        "640",
        "--height",
        "480",
        "--u",
        "320",
        "--v",
        "400",
    ]);
    let out = stdout(&o);
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(row[1].abs() < 1e-9);
    assert!(row[2] < 0.0);
}
