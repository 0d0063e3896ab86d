use std::path::{Path, PathBuf};
use std::process::Command;

use pgm_cli::io::EnsembleFile;
use pgm_cli::report::{flatten, parse_tabular};
use pgm_cli::{run, Outcome};
use serde_json::Value;
use tempfile::TempDir;

fn pgm(args: &[&str]) -> Outcome {
    let mut full = vec!["pgm"];
    full.extend_from_slice(args);
    run(full)
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", o.stdout))
}

fn gen_file(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    let p = path.to_str().unwrap().to_string();
    full.extend_from_slice(&["--output", &p]);
    let o = pgm(&full);
    assert_eq!(o.code, 0, "{}", o.stderr);
    path
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pgm_two_state_diagonal() {
    let dir = TempDir::new().unwrap();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let f = gen_file(
        &dir,
        "two.json",
        &["equal-overlap", "--n", "2", "--c", &c.to_string()],
    );
    let o = pgm(&["pgm", "--input", s(&f)]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    let expect = (1.0 + (1.0 - c * c).sqrt()) / 2.0;
    for d in v["results"]["diagonal"].as_array().unwrap() {
        assert!((d.as_f64().unwrap() - expect).abs() < 1e-6);
    }
    assert!(v["results"]["route_max_difference"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["parameters"]["n"], 2);
}

#[test]
fn pgm_orthonormal_has_zero_error() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "orth.json",
        &["equal-overlap", "--n", "4", "--c", "0"],
    );
    let v = json(&pgm(&["pgm", "--input", s(&f)]));
    assert!(v["results"]["worst_case_error"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["results"]["gram"]["op_norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn malformed_pair_is_input_error_with_path() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "bad.json",
        r#"{"dim": 2, "states": [
            {"type": "pure", "amplitudes": [[1, 0], [0]]},
            {"type": "pure", "amplitudes": [[0, 0], [1, 0]]}
        ]}"#,
    );
    let o = pgm(&["pgm", "--input", s(&f)]);
    assert_eq!(o.code, 2);
    let err: Value = serde_json::from_str(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("states[0].amplitudes[1]"));
}

#[test]
fn invalid_state_names_index() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "scaled.json",
        r#"{"dim": 2, "states": [
            {"type": "pure", "amplitudes": [[1, 0], [0, 0]]},
            {"type": "mixed", "matrix": [[[0.6, 0], [0, 0]], [[0, 0], [0.6, 0]]]}
        ]}"#,
    );
    let o = pgm(&["pgm", "--input", s(&f)]);
    assert_eq!(o.code, 2);
    let err: Value = serde_json::from_str(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_state");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("state 1"));
}

#[test]
fn missing_file_is_input_error() {
    let o = pgm(&["pgm", "--input", "/nonexistent/ensemble.json"]);
    assert_eq!(o.code, 2);
}

#[test]
fn bounds_equal_overlap_slack_zero() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "eq.json",
        &["equal-overlap", "--n", "8", "--c", "0.5"],
    );
    let o = pgm(&["bounds", "--input", s(&f)]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let v = json(&o);
    let r = &v["results"]["gram_norm_upper"];
    assert!(r["slack"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(r["holds"], true);
    assert!(v["results"]["copies_theorem1"]["k"].as_u64().unwrap() > 0);
    assert!(v["results"]["copies_theorem2"]["total"].as_u64().unwrap() > 0);
    assert!(v["parameters"]["epsilon_fidelity"].is_number());
    assert!(v["parameters"]["epsilon_overlap"].is_number());
}

#[test]
fn bounds_repeated_state_diagnostic() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "dup.json",
        r#"{"dim": 2, "states": [
            {"type": "pure", "amplitudes": [[1, 0], [0, 0]]},
            {"type": "pure", "amplitudes": [[0, 0], [1, 0]]},
            {"type": "pure", "amplitudes": [[1, 0], [0, 0]]}
        ]}"#,
    );
    let o = pgm(&["bounds", "--input", s(&f)]);
    let v = json(&o);
    let diags = v["diagnostics"].as_array().unwrap();
    assert!(diags
        .iter()
        .any(|d| d.as_str().unwrap().contains("epsilon is zero")));
    assert!(v["results"].get("copies_theorem1").is_none());
    assert!(v["results"].get("copies_theorem2").is_none());
    assert_eq!(o.code, 0);
}

#[test]
fn bounds_maximally_mixed_sandwich_tight() {
    let dir = TempDir::new().unwrap();
    let n = 3;
    let mut rows = Vec::new();
    for r in 0..n {
        let row: Vec<String> = (0..n)
            .map(|c| {
                if r == c {
                    format!("[{}, 0]", 1.0 / n as f64)
                } else {
                    "[0, 0]".into()
                }
            })
            .collect();
        rows.push(format!("[{}]", row.join(", ")));
    }
    let state = format!("{{\"type\": \"mixed\", \"matrix\": [{}]}}", rows.join(", "));
    let text = format!(
        "{{\"dim\": {n}, \"states\": [{}]}}",
        vec![state; n].join(", ")
    );
    let f = write(&dir, "mm.json", &text);
    let o = pgm(&["bounds", "--input", s(&f)]);
    let v = json(&o);
    let l3 = v["results"]["lemma3"].as_array().unwrap();
    for r in l3.iter().filter(|r| r["direction"] == "lower") {
        assert!((r["bound_value"].as_f64().unwrap() - 1.0 / n as f64).abs() < 1e-12);
        assert!(r["slack"].as_f64().unwrap().abs() < 1e-9);
    }
    // identical states: zero epsilon, no budgets
    assert!(v["results"].get("copies_theorem1").is_none());
    assert_eq!(o.code, 0);
}

#[test]
fn bounds_mixed_runs_tensor_check_or_reports_skip() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "g.json",
        &[
            "ginibre", "--d", "2", "--rank", "2", "--n", "2", "--seed", "4",
        ],
    );
    let o = pgm(&["bounds", "--input", s(&f), "--delta", "0.2"]);
    let v = json(&o);
    assert!(v["results"].get("copies_theorem2").is_none());
    assert!(
        v["results"].get("multicopy_pgm").is_some()
            || v["diagnostics"]
                .as_array()
                .unwrap()
                .iter()
                .any(|d| d.as_str().unwrap().contains("skipped"))
    );
}

#[test]
fn simulate_equal_overlap_meets_guarantee() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "eq4.json",
        &["equal-overlap", "--n", "4", "--c", "0.5"],
    );
    let o = pgm(&[
        "simulate",
        "--input",
        s(&f),
        "--delta",
        "0.2",
        "--trials",
        "500",
        "--seed",
        "5",
    ]);
    assert_eq!(o.code, 0, "{}", o.stdout);
    let v = json(&o);
    let r = &v["results"];
    let total = r["budget"]["total"].as_f64().unwrap();
    assert!(r["mean_copies_used"].as_f64().unwrap() <= total);
    assert!(
        r["worst_case_failure"].as_f64().unwrap()
            <= 0.2 + 3.0 * r["ci_halfwidth"].as_f64().unwrap()
    );
    assert_eq!(r["per_index_failure"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_refusals() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "eq.json",
        &["equal-overlap", "--n", "3", "--c", "0.2"],
    );
    let few = pgm(&[
        "simulate",
        "--input",
        s(&f),
        "--trials",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(few.code, 2);
    let no_seed = pgm(&["simulate", "--input", s(&f)]);
    assert_eq!(no_seed.code, 2);
    let g = gen_file(
        &dir,
        "mixed.json",
        &[
            "ginibre", "--d", "3", "--rank", "2", "--n", "3", "--seed", "1",
        ],
    );
    let mixed = pgm(&["simulate", "--input", s(&g), "--seed", "1"]);
    assert_eq!(mixed.code, 3);
    let err: Value = serde_json::from_str(&mixed.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("bounds"));
}

#[test]
fn simulate_same_seed_byte_identical() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "h.json",
        &["haar", "--d", "6", "--n", "5", "--seed", "2"],
    );
    let args = [
        "simulate",
        "--input",
        s(&f),
        "--trials",
        "200",
        "--seed",
        "9",
    ];
    let a = pgm(&args);
    let b = pgm(&args);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend_from_slice(&["--threads", "3"]);
    assert_eq!(pgm(&threaded).stdout, a.stdout);
}

#[test]
fn simulate_warns_on_overstated_epsilon() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "eq.json",
        &["equal-overlap", "--n", "3", "--c", "0.5"],
    );
    let o = pgm(&[
        "simulate",
        "--input",
        s(&f),
        "--trials",
        "100",
        "--seed",
        "1",
        "--epsilon",
        "0.99",
    ]);
    let v = json(&o);
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());
    assert_eq!(v["parameters"]["epsilon_user"], 0.99);
}

#[test]
fn copies_formulas() {
    let v = json(&pgm(&[
        "copies",
        "--n",
        "8",
        "--epsilon",
        "0.1",
        "--delta",
        "0.01",
        "--gram-norm",
        "2",
    ]));
    let k1 = ((2.0f64 / 0.1) * (8.0f64 / 0.01).ln()).ceil() as u64;
    assert_eq!(v["results"]["copies_theorem1"]["k"].as_u64().unwrap(), k1);
    let k2 = (2.0 * (2.0f64 / 0.01).ln()).ceil() as u64;
    let l2 = ((2.0 * k2 as f64 / 0.01).ln() / 0.1).ceil() as u64;
    assert_eq!(v["results"]["copies_theorem2"]["k"].as_u64().unwrap(), k2);
    assert_eq!(v["results"]["copies_theorem2"]["l"].as_u64().unwrap(), l2);
    assert_eq!(
        v["results"]["copies_theorem2"]["total"].as_u64().unwrap(),
        k2 * (l2 + 1)
    );
    assert_eq!(
        pgm(&["copies", "--n", "8", "--epsilon", "0", "--delta", "0.01"]).code,
        2
    );
}

#[test]
fn gen_equal_overlap_zero_is_orthonormal() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(&dir, "o.json", &["equal-overlap", "--n", "4", "--c", "0"]);
    let e = EnsembleFile::read(&f).unwrap().to_ensemble().unwrap();
    let fm = e.fidelity_matrix();
    for (i, row) in fm.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-12);
        }
    }
}

#[test]
fn gen_haar_repeatable_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let a = gen_file(
        &dir,
        "a.json",
        &["haar", "--d", "8", "--n", "8", "--seed", "7"],
    );
    let b = gen_file(
        &dir,
        "b.json",
        &["haar", "--d", "8", "--n", "8", "--seed", "7"],
    );
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let parsed = EnsembleFile::parse(&ta).unwrap();
    assert_eq!(parsed.to_text(), ta);
    parsed.to_ensemble().unwrap();
    // stdout mode emits the same file text
    let o = pgm(&["gen", "haar", "--d", "8", "--n", "8", "--seed", "7"]);
    assert_eq!(o.stdout, ta);
}

#[test]
fn gen_ginibre_rank_one_is_pure() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "g.json",
        &[
            "ginibre", "--d", "4", "--rank", "1", "--n", "3", "--seed", "11",
        ],
    );
    let e = EnsembleFile::read(&f).unwrap().to_ensemble().unwrap();
    assert!(e.is_pure());
}

#[test]
fn gen_argument_errors() {
    assert_eq!(pgm(&["gen", "haar", "--d", "4", "--n", "3"]).code, 2);
    assert_eq!(
        pgm(&["gen", "equal-overlap", "--n", "3", "--c", "1.5"]).code,
        2
    );
    assert_eq!(
        pgm(&["gen", "ginibre", "--d", "4", "--n", "3", "--seed", "1"]).code,
        2
    );
    assert_eq!(pgm(&["gen", "nonsense", "--n", "3"]).code, 2);
}

#[test]
fn tabular_matches_structured() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "h.json",
        &["haar", "--d", "4", "--n", "3", "--seed", "1"],
    );
    for cmd in ["pgm", "bounds"] {
        let st = pgm(&[cmd, "--input", s(&f)]);
        let tb = pgm(&[cmd, "--input", s(&f), "--format", "tabular"]);
        assert_eq!(st.code, tb.code);
        assert_eq!(flatten(&json(&st)), parse_tabular(&tb.stdout));
    }
}

#[test]
fn report_written_to_output_file() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "h.json",
        &["haar", "--d", "3", "--n", "3", "--seed", "1"],
    );
    let out = dir.path().join("report.json");
    let o = pgm(&["pgm", "--input", s(&f), "--output", s(&out)]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["command"], "pgm");
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = gen_file(
        &dir,
        "h.json",
        &["haar", "--d", "3", "--n", "3", "--seed", "1"],
    );
    let bin = env!("CARGO_BIN_EXE_pgm");
    let ok = Command::new(bin)
        .args(["pgm", "--input", s(&f)])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["command"], "pgm");
    let bad = Command::new(bin)
        .args([
            "simulate",
            "--input",
            s(&f),
            "--trials",
            "10",
            "--seed",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(bad.stdout.is_empty());
    let err: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert!(err["error"]["message"].is_string());
}
