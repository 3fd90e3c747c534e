use std::path::Path;
use std::process::{Command, Output};

fn odlqr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odlqr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const TOY: &str = r#"{
  "version": "odlqr-problem-v1",
  "A": [[0]],
  "B": [[1]],
  "C": [[1]],
  "Q": [[1]],
  "R": [[1]],
  "Y": [[1, 0], [0, 1]]
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn design_on_a_memoryless_plant_gives_zero_gains() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "toy.json", TOY);
    let out = odlqr(&["design", "--problem", &file]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["K_star"][0][0].as_f64().unwrap(), 0.0);
    assert_eq!(v["L_star"][0][0].as_f64().unwrap(), 0.0);
    assert!(v["validation"]["checks"].is_array());
}

#[test]
fn design_prints_rounded_gains() {
    let out = odlqr(&["design", "--problem", "doyle-1d"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("K_star = [[4.8768, 4.3773]]"), "{stderr}");
    assert!(
        stderr.contains("L_star = [[-0.5667], [1.8333]]"),
        "{stderr}"
    );
}

#[test]
fn out_directory_receives_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested");
    let out = odlqr(&[
        "stationary",
        "--problem",
        "doyle-1d",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("stationary.json")).unwrap())
            .unwrap();
    assert!((v["result"]["cost"].as_f64().unwrap() - 102.2875).abs() < 0.01);
    assert!(v["fd_grad_norm_K"].as_f64().unwrap() < 1e-5);
}

#[test]
fn input_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        &TOY.replace("\"B\": [[1]]", "\"B\": [[1], [2]]"),
    );
    let out = odlqr(&["design", "--problem", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.json:4: B:"), "{stderr}");

    let indefinite = write(
        dir.path(),
        "r.json",
        &TOY.replace("\"R\": [[1]]", "\"R\": [[-1]]"),
    );
    let out = odlqr(&["grad", "--problem", &indefinite]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r.json:7: check 'R PD' failed"));

    assert_eq!(
        odlqr(&["design", "--problem", "missing.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(odlqr(&["design"]).status.code(), Some(2));
    assert_eq!(
        odlqr(&["frobnicate", "--problem", "doyle-1d"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        odlqr(&[
            "landscape",
            "--problem",
            "doyle-1d",
            "--grid",
            "L=0:1:1,0:1:2"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn grid_over_four_entries_suggests_a_slice() {
    let out = odlqr(&[
        "landscape",
        "--problem",
        "doyle-2d",
        "--grid",
        "L=-1:1:5,-1:1:5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L@I,J"));
    let out = odlqr(&[
        "landscape",
        "--problem",
        "doyle-2d",
        "--grid",
        "L@0,3=0:2:5,0:2:5",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "toy.json", TOY);
    let gains = write(dir.path(), "g.json", r#"{"K": [[3]], "L": [[0]]}"#);
    let out = odlqr(&["grad", "--problem", &file, "--gains", &gains]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn reproduce_misses_exit_with_one() {
    let out = odlqr(&["reproduce", "--problem", "doyle-2d", "--weights", "1,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!json(&out)["passed"].as_bool().unwrap());
    let out = odlqr(&["reproduce", "--problem", "some-file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn landscape_csv_shape() {
    let out = odlqr(&[
        "landscape",
        "--problem",
        "doyle-1d",
        "--grid",
        "L=-5:5:21,-5:5:31",
        "--jobs",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["g1", "g2", "cost", "grad_norm_K", "grad_norm_L", "stable"]
    );
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 21 * 31);
    for r in &records {
        match &r[5] {
            "0" => assert!(r[2].is_empty() && r[3].is_empty() && r[4].is_empty()),
            "1" => assert!(r[2].parse::<f64>().unwrap() > 0.0),
            other => panic!("stable flag {other}"),
        }
    }
}

#[test]
fn thread_count_does_not_change_the_output() {
    let args = |jobs: &'static str| {
        [
            "landscape",
            "--problem",
            "doyle-1d",
            "--grid",
            "K=-2:10:41,-2:10:41",
            "--jobs",
            jobs,
        ]
    };
    let one = odlqr(&args("1"));
    let four = odlqr(&args("4"));
    assert_eq!(one.stdout, four.stdout);
    let sim = |jobs: &str| {
        odlqr(&[
            "simulate",
            "--problem",
            "doyle-1d",
            "--samples",
            "500",
            "--seed",
            "9",
            "--jobs",
            jobs,
        ])
        .stdout
    };
    assert_eq!(sim("1"), sim("4"));
}

#[test]
fn simulate_and_dominance_report_json() {
    let out = odlqr(&[
        "simulate",
        "--problem",
        "doyle-1d",
        "--gains",
        "stationary",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["monte_carlo"]["samples"], 2000);
    assert_eq!(v["monte_carlo"]["distribution"], "gaussian");

    let out = odlqr(&["dominance", "--problem", "doyle-2d"]);
    assert_eq!(out.status.code(), Some(0));
    let verdict = json(&out)["verdict"].as_str().unwrap().to_string();
    assert!(["feasible", "infeasible", "not_applicable"].contains(&verdict.as_str()));
}

#[test]
fn validate_reports_special_structure() {
    let out = odlqr(&["validate", "--problem", "doyle-1d-ys"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["special_structure"], true);
    assert_eq!(v["all_passed"], true);
}
