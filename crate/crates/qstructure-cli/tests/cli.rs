use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qstructure::format::{self, Input};
use qstructure::numerics::Tolerances;
use qstructure::oqrw;
use qstructure_cli::AnalysisReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qstructure"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn example(args: &[&str], file: &str) -> PathBuf {
    let path = scratch(file);
    let mut full = vec!["example"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", path.to_str().unwrap()]);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn analyze(path: &Path) -> (AnalysisReport, i32, String) {
    let out = run(&["analyze", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let report: AnalysisReport = serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (report, out.status.code().unwrap(), text)
}

#[test]
fn pauli_d4_report() {
    let path = example(&["pauli", "--d", "4", "--alpha", "0.5"], "pauli4.json");
    let (r, code, _) = analyze(&path);
    assert_eq!(code, 0, "{:?}", r.failures().collect::<Vec<_>>());
    assert_eq!(r.period(), Some(2));
    assert_eq!(r.dims.fixed_points, 2);
    assert_eq!(r.dims.dfa, 8);
    assert_eq!(r.dims.dfa_center, Some(2));
    assert!(r.faithful);
}

#[test]
fn identity_report() {
    let path = example(&["identity", "--d", "3"], "identity3.json");
    let (r, code, text) = analyze(&path);
    assert_eq!(code, 0);
    assert_eq!(r.period(), Some(1));
    assert_eq!(r.dims.dfa, 9);
    let gap = r.gap.as_ref().unwrap();
    assert!(gap.eps_asymptotic.is_infinite());
    assert!(text.contains("\"eps_asymptotic\": \"inf\""));
}

#[test]
fn non_unital_input_is_an_input_error() {
    let path = scratch("nonunital.json");
    std::fs::write(&path, r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]]]}"#).unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not unital"));
}

#[test]
fn missing_file_and_unknown_example_are_input_errors() {
    assert_eq!(run(&["analyze", "/nonexistent/input.json"]).status.code(), Some(2));
    assert_eq!(run(&["example", "no-such-example"]).status.code(), Some(2));
    assert_eq!(run(&["example", "nn-cycle", "--preset", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["example", "pauli", "--alpha", "1.5"]).status.code(), Some(2));
}

#[test]
fn verify_pauli_d3_passes() {
    let path = example(&["pauli", "--d", "3"], "pauli3.json");
    let out = run(&["verify", path.to_str().unwrap()]);
    let r: AnalysisReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", r.failures().collect::<Vec<_>>());
    assert!(r.checks.len() > 40);
    assert!(r.checks.iter().any(|c| c.name == "dfa has no off-diagonal part" && c.pass));
}

#[test]
fn corrupted_kraus_list_fails_verification() {
    let path = example(&["unitary-mixture", "--d", "3", "--seed", "5"], "mixture.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let entry = &mut v["kraus"][0][0][0][0];
    *entry = serde_json::json!(entry.as_f64().unwrap() + 1e-3);
    let bad = scratch("corrupted.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = run(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r: AnalysisReport = serde_json::from_slice(&out.stdout).unwrap();
    let unital = r.checks.iter().find(|c| c.name == "Kraus operators are unital").unwrap();
    assert!(!unital.pass && unital.residual > 1e-4);
}

#[test]
fn example_pauli_has_four_blocks() {
    let path = example(&["pauli", "--d", "4", "--alpha", "0.5"], "pauli4-blocks.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["transitions"].as_array().unwrap().len(), 4);
    assert_eq!(v["local_dims"], serde_json::json!([4, 4]));
}

#[test]
fn cyclic_shift_example_is_deterministic() {
    let a = example(&["cyclic-shift", "--d", "3", "--seed", "42"], "shift-a.json");
    let b = example(&["cyclic-shift", "--d", "3", "--seed", "42"], "shift-b.json");
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    let tol = Tolerances::default();
    let Input::Oqrw(w) = format::parse_input(&ta, &tol).unwrap() else { panic!("expected a walk") };
    assert_eq!(w.transitions.len(), 3);
    assert!(w.cyclic);
    let c = example(&["cyclic-shift", "--d", "3", "--seed", "43"], "shift-c.json");
    assert_ne!(ta, std::fs::read_to_string(&c).unwrap());
}

#[test]
fn nn_cycle_preset_matches_the_builder() {
    let path = example(&["nn-cycle", "--n", "8", "--preset", "special-basis"], "nn8.json");
    let tol = Tolerances::default();
    let Input::Oqrw(w) = format::parse_input(&std::fs::read_to_string(&path).unwrap(), &tol).unwrap() else {
        panic!("expected a walk")
    };
    let (l_plus, l_minus) = oqrw::special_basis_preset();
    assert_eq!(w.num_vertices(), 8);
    assert_eq!(w.transition(1, 0).unwrap(), &l_plus);
    assert_eq!(w.transition(7, 0).unwrap(), &l_minus);
}

#[test]
fn round_trip_is_bit_for_bit() {
    let path = example(&["pauli", "--d", "3"], "pauli3-rt.json");
    let (r1, _, t1) = analyze(&path);
    let (_, _, t2) = analyze(&path);
    assert_eq!(t1, t2);
    let again = serde_json::to_string_pretty(&r1).unwrap() + "\n";
    assert_eq!(again, t1);
    assert_eq!(r1.period(), Some(3));
    assert_eq!(r1.dims.dfa, 3);
}

#[test]
fn non_faithful_walk_marks_undetermined_fields() {
    let path = example(&["random-oqrw", "--n", "4", "--h", "2", "--seed", "1"], "random1.json");
    let (r, code, _) = analyze(&path);
    assert_eq!(code, 0);
    assert!(!r.faithful);
    assert!(r.components.is_none() && r.gap.is_none());
    assert!(r.undetermined.iter().any(|s| s == "components"));
    assert_eq!(r.dfa.method, "word-commutant");
}

#[test]
fn text_format_and_output_file() {
    let path = example(&["pauli", "--d", "3"], "pauli3-text.json");
    let out_path = scratch("pauli3-report.txt");
    let out = run(&["analyze", path.to_str().unwrap(), "--format", "text", "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("period 3"));
    assert!(text.contains("-0.5+0.8660254038i"));
}

#[test]
fn tolerance_flag_is_recorded() {
    let path = example(&["pauli", "--d", "3"], "pauli3-tol.json");
    let out = run(&["analyze", path.to_str().unwrap(), "--tol", "1e-7", "--seed", "9", "--max-power", "4"]);
    let r: AnalysisReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.settings.tolerances.eq_tol, 1e-7);
    assert_eq!(r.settings.seed, 9);
    assert_eq!(r.power_table.unwrap().rows.len(), 4);
}
