//! End-to-end tests of the `loop-toda` binary: exit-status contract, output
//! formats, manifests and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loop_toda::lie_core::ComplexMatrix;
use loop_toda::solver::{InitialData, RealFormTag, SimulationInput};
use loop_toda::toda_builder::{build_periodic_chain, ChainCoupling};
use loop_toda_cli::{ExitStatus, InputRef, RunManifest};
use num_complex::Complex64;
use tempfile::TempDir;

const SMALL_KINK_GRID: &str = "-5,5,-5,5,0.04,-0.04";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loop-toda"))
        .args(args)
        .env_remove("TODA_MAX_ENUM")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GL2_SPEC: &str =
    r#"{"family":"gl","n":2,"type":"gl_inner","M":2,"n_list":[1,1],"k_list":[1]}"#;
const SO4_SPEC: &str =
    r#"{"family":"so","n":4,"type":"sosp_I","M":4,"n_list":[1,2,1],"k_list":[1,1]}"#;
const SO4_BROKEN: &str =
    r#"{"family":"so","n":4,"type":"sosp_I","M":4,"n_list":[1,2,2],"k_list":[1,1]}"#;

#[test]
fn validate_accepts_two_block_gl_spec() {
    let dir = TempDir::new().unwrap();
    let out = run(&["validate", "--spec", s(&write(&dir, "s.json", GL2_SPEC))]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "valid\n");
}

#[test]
fn validate_lists_violations_of_non_palindromic_so_spec() {
    let dir = TempDir::new().unwrap();
    let out = run(&["validate", "--spec", s(&write(&dir, "s.json", SO4_BROKEN))]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(
        text.lines().any(|l| l.starts_with("n_palindrome:")),
        "{text}"
    );
    assert!(text.lines().any(|l| l.starts_with("n_sum:")), "{text}");
}

#[test]
fn validate_json_report() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "validate",
        "--json",
        "--spec",
        s(&write(&dir, "s.json", SO4_BROKEN)),
    ]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["violations"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_or_missing_input_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"family\":");
    assert_eq!(code(&run(&["validate", "--spec", s(&bad)])), 2);
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&run(&["validate", "--spec", s(&missing)])), 2);
    assert_eq!(code(&run(&["simulate", "--preset", "no-such-preset"])), 2);
    assert_eq!(
        code(&run(&[
            "simulate",
            "--preset",
            "sinh-gordon",
            "--grid",
            "1,2"
        ])),
        2
    );
}

#[test]
fn enumerate_gl2_lists_trivial_and_two_block_specs() {
    let out = run(&["enumerate", "gl", "2", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let headers: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(headers.len(), 2, "{text}");
    assert!(headers[0].contains("type=trivial p=1"));
    assert!(headers[1].contains("type=gl_inner p=2 n=(1,1) k=(1)"));
}

#[test]
fn enumerate_with_order_one_gives_only_the_trivial_spec() {
    let out = run(&["enumerate", "sl", "3", "1", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["spec"]["type"], "trivial");
}

#[test]
fn enumerate_latex_matches_golden_file() {
    let out = run(&["enumerate", "gl", "3", "3", "--latex"]);
    assert_eq!(code(&out), 0);
    let golden = include_str!("golden/enumerate_gl_3_3.tex");
    assert_eq!(stdout(&out), golden);
}

#[test]
fn enumeration_cap_exceeded_exits_with_three() {
    let out = Command::new(env!("CARGO_BIN_EXE_loop-toda"))
        .args(["enumerate", "gl", "4", "3"])
        .env("TODA_MAX_ENUM", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn describe_spec_and_preset() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "so.json", SO4_SPEC);
    let out = run(&["describe", "--spec", s(&spec), "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["fold"].is_object());

    let out = run(&["describe", "--preset", "sine-gordon-kink", "--latex"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\\begin{align*}"));
}

#[test]
fn kink_preset_writes_csv_and_manifest_with_oracle_error() {
    let dir = TempDir::new().unwrap();
    let outdir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--preset",
        "sine-gordon-kink",
        "--grid",
        SMALL_KINK_GRID,
        "--output",
        s(&outdir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(outdir.join("field.csv")).unwrap();
    assert!(csv.starts_with("z_minus,z_plus,alpha,block_row,block_col,re,im\n"));
    // 251 × 251 grid points, one 1×1 independent node.
    assert_eq!(csv.lines().count(), 1 + 251 * 251);

    let manifest =
        RunManifest::from_json(&fs::read_to_string(outdir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.exit_status, ExitStatus::Ok);
    assert_eq!(manifest.input, InputRef::Preset("sine-gordon-kink".into()));
    assert_eq!(manifest.summary.oracle.as_deref(), Some("analytic_kink"));
    let err = manifest.summary.oracle_error.unwrap();
    // Second order: about 3.3e-3 at h = 0.08 scales to about 8e-4 here.
    assert!(err < 1.5e-3, "kink error {err}");
    assert!(manifest.summary.reality_drift.unwrap() < 1e-10);
}

#[test]
fn free_field_preset_matches_factorized_solution() {
    let out = run(&["simulate", "--preset", "free-field", "--json"]);
    assert_eq!(code(&out), 0);
    let manifest = RunManifest::from_json(&stdout(&out)).unwrap();
    assert_eq!(
        manifest.summary.oracle.as_deref(),
        Some("free_factorization")
    );
    assert!(manifest.summary.oracle_error.unwrap() < 1e-10);
}

#[test]
fn simulate_system_file_requires_grid() {
    let dir = TempDir::new().unwrap();
    let input = SimulationInput {
        system: build_periodic_chain(3, 1, ChainCoupling::Identity).unwrap(),
        initial: InitialData::default(),
        real_form: RealFormTag::None,
    };
    let file = write(&dir, "chain.json", &input.to_json());
    assert_eq!(code(&run(&["simulate", "--system", s(&file)])), 2);
    let out = run(&[
        "simulate",
        "--system",
        s(&file),
        "--grid",
        "0,1,0,1,0.125,0.125",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("error vs constant: 0.000e0"));
}

#[test]
fn singular_data_exits_with_blow_up_and_partial_output() {
    let dir = TempDir::new().unwrap();
    let input = SimulationInput {
        system: build_periodic_chain(2, 1, ChainCoupling::Identity).unwrap(),
        initial: InitialData::Constant {
            gammas: Some(vec![
                ComplexMatrix::scalar(Complex64::new(0.0, 0.0)),
                ComplexMatrix::identity(1),
            ]),
        },
        real_form: RealFormTag::None,
    };
    let file = write(&dir, "singular.json", &input.to_json());
    let outdir = dir.path().join("run");
    let out = run(&[
        "simulate",
        "--system",
        s(&file),
        "--grid",
        "0,1,0,1,0.125,0.125",
        "--output",
        s(&outdir),
    ]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).starts_with("status: blow-up"));
    let manifest =
        RunManifest::from_json(&fs::read_to_string(outdir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.exit_code, 4);
    assert!(outdir.join("field.csv").exists());
}

#[test]
fn manifest_round_trips_through_json() {
    let out = run(&[
        "simulate",
        "--preset",
        "sinh-gordon",
        "--grid",
        "0,1,0,1,0.0625,0.0625",
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let manifest = RunManifest::from_json(&stdout(&out)).unwrap();
    let again = RunManifest::from_json(&manifest.to_json()).unwrap();
    assert_eq!(manifest, again);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let outdir = dir.path().join(name);
        let out = run(&[
            "simulate",
            "--preset",
            "sinh-gordon",
            "--grid",
            "0,1,0,1,0.0625,0.0625",
            "--stride",
            "2",
            "--output",
            s(&outdir),
        ]);
        assert_eq!(code(&out), 0);
        outputs.push(fs::read(outdir.join("field.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let first = run(&[
        "check",
        "--spec",
        s(&write(&dir, "so.json", SO4_SPEC)),
        "--json",
    ]);
    let second = run(&["check", "--spec", s(&dir.path().join("so.json")), "--json"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn check_passes_on_valid_specs() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("gl.json", GL2_SPEC), ("so.json", SO4_SPEC)] {
        let out = run(&["check", "--spec", s(&write(&dir, name, text))]);
        let report = stdout(&out);
        assert_eq!(code(&out), 0, "{report}");
        assert!(report.lines().all(|l| l.starts_with("PASS ")), "{report}");
    }
    let out = run(&["check", "--spec", s(&dir.path().join("so.json"))]);
    assert!(stdout(&out).contains("fold_invariance_order"));
}

#[test]
fn check_reports_validation_failures() {
    let dir = TempDir::new().unwrap();
    let out = run(&["check", "--spec", s(&write(&dir, "bad.json", SO4_BROKEN))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out)
        .lines()
        .any(|l| l.starts_with("FAIL validation: n_palindrome")));
}
