use std::path::PathBuf;

use affmf_cli::commands::{CHECK_HEADER, EMPIRICAL_HEADER, PRESSURE_HEADER, SPECTRUM_HEADER};
use affmf_cli::{run, EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK};

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("affmf").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

/// Splits a CSV document into preamble lines, header and data rows.
fn parse(doc: &str) -> (Vec<&str>, Vec<String>, Vec<Vec<String>>) {
    let preamble: Vec<&str> = doc.lines().take_while(|l| l.starts_with('#')).collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(doc.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (preamble, header, rows)
}

fn assert_preamble(preamble: &[&str], command: &str) {
    assert!(preamble[0].starts_with("# affmf: "));
    assert!(
        preamble.contains(&format!("# command: {command}").as_str()),
        "{preamble:?}"
    );
    assert!(preamble.iter().any(|l| l.starts_with("# config_hash: ")));
    assert!(preamble.contains(&"# logarithms: natural"));
}

const P1_LIKE: &str = r#"{
  "schema": 1,
  "name": "custom",
  "matrices": [[0.6, 0.2, 0.1, 0.3], [0.4, 0.1, 0.2, 0.5]],
  "translations": [[0, 0], [0.5, 0.4]],
  "probabilities": [0.3, 0.6]
}"#;

#[test]
fn check_exit_codes_follow_verdicts() {
    let (code, out, _) = cli(&["check", "builtin:d2-carpet"]);
    assert_eq!(code, EXIT_OK);
    let (pre, header, rows) = parse(&out);
    assert_preamble(&pre, "check");
    assert_eq!(header, CHECK_HEADER);
    assert!(rows
        .iter()
        .any(|r| r[0] == "strong_separation" && r[1] == "yes"));

    let (code, out, _) = cli(&["check", "builtin:rotation", "--hypotheses", "domination"]);
    assert_eq!(code, EXIT_ANALYSIS);
    assert!(out.lines().any(|l| l.starts_with("domination,no")), "{out}");
}

#[test]
fn malformed_config_is_an_input_error() {
    let path = scratch("bad-probabilities.json");
    std::fs::write(&path, P1_LIKE).unwrap();
    let (code, out, err) = cli(&["spectrum", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(err.contains("probabilities"), "{err}");

    let (code, _, err) = cli(&["check", "builtin:nope"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("nope"));
    assert_eq!(
        cli(&["pressure", "builtin:d2", "--q", "oops"]).0,
        EXIT_INPUT
    );
    assert_eq!(
        cli(&["--threads", "0", "check", "builtin:d2"]).0,
        EXIT_INPUT
    );
}

#[test]
fn config_file_round_trips() {
    let path = scratch("good.json");
    std::fs::write(&path, P1_LIKE.replace("[0.3, 0.6]", "[0.4, 0.6]")).unwrap();
    let csv = scratch("good.csv");
    let report = scratch("good-report.json");
    let (code, out, _) = cli(&[
        "pressure",
        path.to_str().unwrap(),
        "--q",
        "2",
        "--depths",
        "3,6",
        "-o",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&csv).unwrap();
    let (pre, header, rows) = parse(&written);
    assert_preamble(&pre, "pressure");
    assert!(pre.contains(&"# system: custom"));
    assert_eq!(header, PRESSURE_HEADER);
    assert_eq!(rows.len(), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["command"], "pressure");
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn spectrum_header_and_degenerate_values() {
    let (code, out, _) = cli(&[
        "spectrum",
        "builtin:equal-maps",
        "--qmin",
        "0.5",
        "--qmax",
        "3",
        "--steps",
        "5",
    ]);
    assert_eq!(code, EXIT_OK);
    let (pre, header, rows) = parse(&out);
    assert_preamble(&pre, "spectrum");
    assert_eq!(header, SPECTRUM_HEADER);
    assert_eq!(rows.len(), 5);
    let expected = 2f64.ln() / 2.5f64.ln();
    for r in &rows {
        for col in [1, 3, 4, 5] {
            let v: f64 = r[col].parse().unwrap();
            assert!((v - expected).abs() < 1e-6, "{r:?}");
        }
        assert_eq!(r.len(), 12);
        assert_eq!(r[6], "(0,1)");
        assert_eq!(r[11], "ok");
    }
}

#[test]
fn empty_grid_is_an_analysis_failure() {
    let (code, out, err) = cli(&[
        "spectrum",
        "builtin:d2",
        "--qmin",
        "0.99",
        "--qmax",
        "1.01",
        "--steps",
        "3",
    ]);
    assert_eq!(code, EXIT_ANALYSIS);
    assert!(out.is_empty());
    assert!(err.contains("empty"), "{err}");
}

#[test]
fn undersampled_empirical_run_fails_with_hint() {
    let (code, out, err) = cli(&["empirical", "builtin:d2-carpet", "--points", "100"]);
    assert_eq!(code, EXIT_ANALYSIS);
    assert!(out.is_empty());
    assert!(
        err.contains("insufficient sampling") && err.contains("--points"),
        "{err}"
    );
}

#[test]
fn empirical_csv_shape() {
    let (code, out, _) = cli(&[
        "empirical",
        "builtin:d2-carpet",
        "--points",
        "100000",
        "--test-points",
        "8",
    ]);
    assert_eq!(code, EXIT_OK);
    let (pre, header, rows) = parse(&out);
    assert_preamble(&pre, "empirical");
    assert!(pre
        .iter()
        .any(|l| l.starts_with("# overlay_sup_deviation: ")));
    assert!(pre
        .iter()
        .any(|l| l.starts_with("# exact_dimension: slope ")));
    assert_eq!(header, EMPIRICAL_HEADER);
    assert!(!rows.is_empty());
}

#[test]
fn normalized_pressure_vanishes() {
    let (code, out, _) = cli(&["pressure", "builtin:p1", "--q", "1", "--s", "1.3"]);
    assert_eq!(code, EXIT_OK);
    let (_, _, rows) = parse(&out);
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!(r[1].parse::<f64>().unwrap().abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    for cmd in [
        &["check", "builtin:d2-carpet"][..],
        &[
            "pressure",
            "builtin:d2",
            "--q",
            "0.5",
            "--s",
            "0.5",
            "--depths",
            "4,8",
        ],
        &["spectrum", "builtin:p1", "--steps", "4", "--depth", "8"],
    ] {
        let runs: Vec<String> = ["1", "1", "3"]
            .iter()
            .map(|t| {
                let mut args = vec!["--threads", t];
                args.extend_from_slice(cmd);
                cli(&args).1
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{cmd:?}");
        assert_eq!(runs[0], runs[2], "{cmd:?}");
    }
}
