use std::process::{Command, Output};

use mixtoll::fixtures::bundled;
use mixtoll::scenario::{parse_scenario, parse_tolls, serialize_scenario};

fn mixtoll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixtoll")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `column` in the first data row of CSV `text`.
fn field(text: &str, column: &str) -> String {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == column).expect("column present");
    r.records().next().unwrap().unwrap()[idx].to_owned()
}

#[test]
fn poa_of_example_a() {
    let o = mixtoll(&["poa", "--scenario", "example_a_k2", "--scheme", "none"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "empirical_poa"), "2");
    assert_eq!(field(&text, "bound_name"), "lambda_untolled");
    assert_eq!(field(&text, "satisfied"), "true");
}

#[test]
fn bounds_at_k_one() {
    let o = mixtoll(&["reproduce", "--target", "bounds", "--k-min", "1", "--k-max", "1", "--k-step", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(field(&text, "k"), "1");
    assert_eq!(field(&text, "lambda_untolled"), "1.33333333333");
    assert_eq!(field(&text, "anonymous_upper"), "1");
}

#[test]
fn examples_table_has_the_worked_numbers() {
    let o = mixtoll(&["reproduce", "--target", "examples", "--k", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for (quantity, value) in [
        ("optimal_cost", "0.833333333333"),
        ("worst_untolled_cost", "1.5"),
        ("anonymous_toll_road1", "0"),
        ("anonymous_toll_road2", "0.333333333333"),
        ("worst_anonymous_cost", "1.33333333333"),
        ("worst_cost_toll_half", "1.3125"),
    ] {
        let line = format!("b,{quantity},{value},{value}");
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
}

#[test]
fn validate_campaign_passes() {
    let o = mixtoll(&["validate", "--instances", "100", "--n", "3", "--m", "2", "--target-k", "2", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.ends_with(",pass")));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["validate", "--instances", "10", "--seed", "3", "--format", "json"],
        vec!["equilibria", "--scenario", "general_two_od", "--scheme", "anonymous"],
        vec!["optimal", "--scenario", "example_b_k4", "--mode", "heuristic", "--seed", "5"],
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("out{run}"));
            let mut full = args.clone();
            full.extend(["--out", path.to_str().unwrap()]);
            let o = mixtoll(&full);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(o.stdout.is_empty());
            outputs.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(mixtoll(&["poa", "--scenario", "pigou", "--unknown"]).status.code(), Some(2));
    assert_eq!(mixtoll(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mixtoll(&["poa", "--scenario", "pigou", "--format", "xml"]).status.code(), Some(2));
    let missing = mixtoll(&["optimal", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("scenario"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version": 1, "network": {"kind": "parallel", "types": ["a"], "roads": [], "demands": [1]}}"#,
    )
    .unwrap();
    let o = mixtoll(&["optimal", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("roads"));
}

#[test]
fn toll_file_feeds_equilibria() {
    let dir = tempfile::tempdir().unwrap();
    let tolls_path = dir.path().join("tolls.json");
    let o = mixtoll(&[
        "toll",
        "--scenario",
        "example_b_k4",
        "--scheme",
        "anonymous",
        "--format",
        "json",
        "--out",
        tolls_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let tolls = parse_tolls(&std::fs::read_to_string(&tolls_path).unwrap()).unwrap();
    assert!((tolls.get(1, 0) - 1.0 / 3.0).abs() < 1e-12);

    let mut scenario = parse_scenario(bundled("example_b_k4").unwrap()).unwrap();
    scenario.tolls = Some(tolls);
    let scenario_path = dir.path().join("tolled.json");
    std::fs::write(&scenario_path, serialize_scenario(&scenario)).unwrap();
    let o = mixtoll(&["equilibria", "--scenario", scenario_path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let worst = csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap()[3].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((worst - 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn epsilon_scheme_flags() {
    let o = mixtoll(&["toll", "--scenario", "example_a_k2", "--scheme", "epsilon", "--mu", "1", "--epsilon", "0.01"]);
    assert!(o.status.success());
    let o = mixtoll(&["toll", "--scenario", "example_a_k2", "--scheme", "epsilon", "--mu", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mixtoll(&["poa", "--scenario", "example_a_k3", "--scheme", "epsilon", "--epsilon", "0.001"]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "empirical_poa"), "1");
}
