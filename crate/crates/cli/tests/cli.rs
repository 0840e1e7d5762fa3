use std::collections::HashSet;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projflat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    serde_json::from_slice(&run(&full).stdout).expect("valid JSON")
}

fn json_numbers(v: &Value, out: &mut HashSet<u64>) {
    match v {
        Value::Number(n) => {
            out.insert(n.as_f64().expect("finite").to_bits());
        }
        Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
        Value::Object(m) => m.values().for_each(|x| json_numbers(x, out)),
        _ => {}
    }
}

/// Decimal or exponent literals in the text; bare integers are skipped since labels use them.
fn text_numbers(text: &str) -> Vec<f64> {
    text.split(|c: char| !(c.is_ascii_digit() || "+-.e".contains(c)))
        .filter(|t| t.contains('.') || t.contains('e'))
        .filter_map(|t| t.parse().ok())
        .collect()
}

#[test]
fn exit_codes_separate_verdicts_from_failures() {
    let sphere = data("sphere2.chart");
    let witness = data("witness3.chart");
    assert_eq!(
        code(&["analyze", &sphere, "--point", "0.3,0.1", "--assert-flat"]),
        0
    );
    assert_eq!(code(&["analyze", &witness, "--point", "0.1,0.2,0.3"]), 0);
    assert_eq!(
        code(&[
            "analyze",
            &witness,
            "--point",
            "0.1,0.2,0.3",
            "--assert-flat"
        ]),
        1
    );
    assert_eq!(
        code(&["analyze", &data("missing.chart"), "--point", "0,0"]),
        2
    );
    assert_eq!(code(&["analyze", &sphere, "--point", "0.1"]), 2);
    assert_eq!(code(&["analyze", &sphere, "--point", "5,0"]), 2);
    assert_eq!(
        code(&["analyze", &data("trace_torsion2.chart"), "--point", "0,0"]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["twistor", &witness]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn failures_go_to_stderr_with_the_path() {
    let out = run(&["cotton", &data("missing.chart"), "--point", "0,0"]);
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.starts_with("error: ") && err.contains("missing.chart"),
        "{err}"
    );
}

#[test]
fn json_is_byte_identical_across_runs() {
    let args = [
        "--json",
        "twistor",
        &data("witness4.chart"),
        "--samples",
        "2",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(1));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn every_number_in_the_text_is_in_the_json() {
    let sphere = data("sphere2.chart");
    let gnomonic = data("gnomonic2.chart");
    let flat = data("flat2.chart");
    let targets = data("targets2.txt");
    let alpha = data("alpha2.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["analyze", &sphere, "--point", "0.3,0.1"],
        vec!["cotton", &sphere, "--point", "0.3,0.1"],
        vec!["invariance", &sphere, "--alpha", &alpha, "--samples", "3"],
        vec!["equivalent", &gnomonic, &flat, "--samples", "2"],
        vec!["equivalent", &gnomonic, &sphere, "--samples", "2"],
        vec!["twistor", &sphere, "--samples", "2"],
        vec!["develop", &gnomonic, "--base", "0,0", "--targets", &targets],
        vec!["reps", "--dim", "4", "--space", "curvature", "--census"],
    ];
    for args in cases {
        let text = String::from_utf8(run(&args).stdout).unwrap();
        let mut known = HashSet::new();
        json_numbers(&json(&args), &mut known);
        let shown = text_numbers(&text);
        assert!(
            !shown.is_empty() || args[0] == "reps",
            "{args:?}: no numbers in\n{text}"
        );
        for x in shown {
            assert!(
                known.contains(&x.to_bits()),
                "{args:?}: {x} missing from JSON\n{text}"
            );
        }
    }
}

#[test]
fn torsion_splits_into_twenty_plus_four_in_dimension_four() {
    let v = json(&["reps", "--dim", "4", "--space", "torsion"]);
    let dims: Vec<u64> = v["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["dim"].as_u64().unwrap())
        .collect();
    assert_eq!(dims, vec![20, 4]);
    assert_eq!(v["total_dim"], 24);
    assert_eq!(v["components"][0]["highest_weight"], "V(1,1,0)");
    let text =
        String::from_utf8(run(&["reps", "--dim", "4", "--space", "torsion"]).stdout).unwrap();
    assert!(text.contains("20 + 4 = 24"), "{text}");
}

#[test]
fn census_needs_an_even_small_dimension() {
    assert_eq!(
        code(&["reps", "--dim", "3", "--space", "torsion", "--census"]),
        2
    );
    assert_eq!(code(&["reps", "--dim", "1", "--space", "torsion"]), 2);
    let v = json(&["reps", "--dim", "4", "--space", "curvature"]);
    for c in v["components"].as_array().unwrap() {
        let mult: u64 = c["spectrum"]
            .as_array()
            .unwrap()
            .iter()
            .map(|km| km[1].as_u64().unwrap())
            .sum();
        assert_eq!(mult, c["dim"].as_u64().unwrap(), "{c}");
    }
    let odd = json(&["reps", "--dim", "5", "--space", "torsion"]);
    assert!(odd["components"][0]["spectrum"].is_null());
}

#[test]
fn gnomonic_sphere_is_equivalent_to_flat_but_not_to_stereographic() {
    let gnomonic = data("gnomonic2.chart");
    let v = json(&["equivalent", &gnomonic, &data("flat2.chart")]);
    assert_eq!(v["verdict"], "projectively equivalent");
    assert_eq!(v["verdicts_agree"], true);
    assert_eq!(code(&["equivalent", &gnomonic, &data("sphere2.chart")]), 1);
    assert_eq!(code(&["equivalent", &gnomonic, &data("witness3.chart")]), 2);
}

#[test]
fn weyl_and_cotton_survive_a_projective_change() {
    let v = json(&[
        "invariance",
        &data("sphere2.chart"),
        "--alpha",
        &data("alpha2.txt"),
    ]);
    assert_eq!(v["verdict"], "invariant");
    assert!(v["report"]["weyl_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn development_of_the_gnomonic_sphere_is_the_identity_chart() {
    let v = json(&[
        "develop",
        &data("gnomonic2.chart"),
        "--base",
        "0,0",
        "--targets",
        &data("targets2.txt"),
    ]);
    for p in v["points"].as_array().unwrap() {
        let target: Vec<f64> = serde_json::from_value(p["target"].clone()).unwrap();
        let affine: Vec<f64> = serde_json::from_value(p["affine"].clone()).unwrap();
        for (a, b) in target.iter().zip(&affine) {
            assert!((a - b).abs() < 1e-9, "{target:?} -> {affine:?}");
        }
    }
    let bad = [
        "develop",
        &data("witness3.chart"),
        "--base",
        "0,0,0",
        "--targets",
        &data("targets3.txt"),
    ];
    assert_eq!(code(&bad), 1);
    assert_eq!(
        json(&bad)["verdict"],
        "not projectively flat: loop holonomy exceeds tolerance"
    );
}

#[test]
fn twistor_removes_trace_torsion_and_rejects_the_rest() {
    let v = json(&["twistor", &data("trace_torsion2.chart"), "--samples", "2"]);
    assert_eq!(v["verdict"], "integrable at every sample");
    assert!(v["torsion_removal"]["alpha"].is_array());
    assert_eq!(
        code(&[
            "twistor",
            &data("tracefree_torsion4.chart"),
            "--samples",
            "1"
        ]),
        1
    );
    assert_eq!(
        code(&["twistor", &data("witness4.chart"), "--samples", "1"]),
        1
    );
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join(format!("projflat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("reps.json");
    let args = ["--json", "reps", "--dim", "4", "--space", "torsion"];
    let mut with_output = args.to_vec();
    let path = file.to_str().unwrap();
    with_output.extend(["--output", path]);
    let out = run(&with_output);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&file).unwrap(), run(&args).stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}
