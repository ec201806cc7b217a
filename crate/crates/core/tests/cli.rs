use std::process::{Command, Output};

use ssfinsler::verify::VerificationReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssfinsler"))
        .args(args)
        .env_remove("SSFINSLER_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_funk_passes() {
    let o = run(&["verify", "--metric", "funk", "--K", "-0.25", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    // defaults are printed in the header
    assert!(
        text.contains("grid     40x40")
            && text.contains("tol = 1e-8")
            && text.contains("seed = 42")
    );
    assert!(text.contains("n = 3"));
}

#[test]
fn verify_shen_in_dimension_four_passes() {
    let o = run(&[
        "verify", "--metric", "shen", "--eps", "0.5", "--K", "-1", "--n", "4",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn wrong_k_fails_with_table() {
    let o = run(&["verify", "--metric", "funk", "--K", "0", "--grid", "10"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("thm1_1") && text.contains("FAIL"));
}

#[test]
fn malformed_flags_exit_2() {
    assert_eq!(
        code(&run(&["verify", "--metric", "funk", "--grid", "1"])),
        2
    );
    assert_eq!(code(&run(&["verify", "--metric", "funk", "--tol", "0"])), 2);
    assert_eq!(
        code(&run(&["verify", "--metric", "funk", "--r-min", "2"])),
        2
    );
    assert_eq!(code(&run(&["verify", "--metric", "nope"])), 2);
    assert_eq!(
        code(&run(&["verify", "--metric", "funk", "--format", "xml"])),
        2
    );
    assert_eq!(code(&run(&["solve-q", "--u", "1"])), 2);
}

#[test]
fn domain_violation_exits_3() {
    let o = run(&["verify", "--metric", "funk", "--rho", "1.5", "--grid", "6"]);
    assert_eq!(code(&o), 3);
    let o = run(&[
        "scan", "--metric", "soln_km1", "--C", "2", "--D", "0.5", "--rho", "2", "--grid", "5",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn json_report_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = path.to_str().unwrap();
    let o = run(&[
        "verify", "--metric", "bryant", "--grid", "12", "--format", "json", "--output", p,
    ]);
    assert_eq!(code(&o), 0);
    let first = std::fs::read_to_string(&path).unwrap();
    let report = VerificationReport::from_json(&first).unwrap();

    let again = dir.path().join("again.json");
    let o = run(&[
        "verify",
        "--replay",
        p,
        "--format",
        "json",
        "--output",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let second = VerificationReport::from_json(&std::fs::read_to_string(&again).unwrap()).unwrap();
    assert_eq!(second.verdicts, report.verdicts);

    // a report whose verdicts contradict its residuals is rejected
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        first.replacen("\"thm1_4\": true", "\"thm1_4\": false", 1),
    )
    .unwrap();
    assert_eq!(
        code(&run(&["verify", "--replay", bad.to_str().unwrap()])),
        1
    );

    // and an unreadable one is a usage error
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(
        code(&run(&["verify", "--replay", bad.to_str().unwrap()])),
        2
    );
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ssfinsler"))
        .args([
            "verify", "--metric", "berwald", "--grid", "5", "--format", "csv",
        ])
        .env("SSFINSLER_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("verify-berwald.csv")).unwrap();
    assert!(csv.starts_with("r,s,check,residual\n"));
}

#[test]
fn oracle_check_examples() {
    for metric in ["funk", "euclidean", "test_poly"] {
        let o = run(&[
            "oracle-check",
            "--metric",
            metric,
            "--n",
            "3",
            "--points",
            "20",
            "--format",
            "json",
        ]);
        assert_eq!(code(&o), 0, "{metric}: {}", stdout(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        for c in v["checks"].as_array().unwrap() {
            let max = c["max_residual"].as_f64().unwrap();
            assert!(max <= 1e-7, "{metric} {}: {max}", c["name"]);
            if metric == "euclidean" {
                assert_eq!(max, 0.0, "{}", c["name"]);
            }
        }
    }
    assert_eq!(
        code(&run(&["oracle-check", "--metric", "funk", "--n", "7"])),
        2
    );
}

#[test]
fn solve_q_examples() {
    let o = run(&[
        "solve-q", "--u", "0.5", "--C", "1", "--D", "1", "--K", "0", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let qs: Vec<f64> = v["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["q"].as_f64().unwrap())
        .collect();
    assert_eq!(qs.len(), 2);
    assert!(
        (qs[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15
            && (qs[1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15
    );

    let o = run(&[
        "solve-q", "--u", "-2", "--C", "1", "--D", "1", "--K", "-1", "--format", "csv",
    ]);
    assert_eq!(code(&o), 0);
    let mut q2: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    q2.sort_by(f64::total_cmp);
    q2.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    assert_eq!(q2.len(), 2);
    assert!((q2[0] - 0.3819660).abs() < 1e-7 && (q2[1] - 2.6180340).abs() < 1e-7);

    let o = run(&["solve-q", "--u", "0", "--C", "1", "--D", "1", "--K", "-1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("discriminant"));
}

#[test]
fn catalog_lists_every_family() {
    let o = run(&["catalog", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);
}
