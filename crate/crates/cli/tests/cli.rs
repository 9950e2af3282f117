use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn etfkit() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_etfkit"));
    cmd.env_remove("ETFKIT_TOL");
    cmd
}

fn run(args: &[&str]) -> Output {
    etfkit().args(args).output().expect("etfkit runs")
}

fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = etfkit()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("etfkit runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn assert_schema(name: &str, doc: &Value) {
    let schema_out = run(&["schema", name]);
    assert_eq!(schema_out.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&schema_out.stdout).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name} schema rejects output: {msgs:?}");
    };
}

#[test]
fn fixtures_are_byte_stable() {
    for (which, file) in [("fig1", "fig1.json"), ("fig2", "fig2.json"), ("fig3", "fig3.code")] {
        let a = run(&["fixtures", "emit", "--which", which]);
        let b = run(&["fixtures", "emit", "--which", which]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.stdout, std::fs::read(fixture(file)).unwrap(), "{file} drifted");
    }
}

#[test]
fn three_stage_pipeline_reproduces_the_code_fixture() {
    let design = run(&["design", "affine", "--q", "2", "--j", "1"]);
    let frame = run_with_stdin(&["frame", "kirkman", "-", "--simplex", "hadamard", "--basis", "hadamard"], &design.stdout);
    assert_eq!(frame.status.code(), Some(0));
    let code = run_with_stdin(&["code", "from-frame", "-"], &frame.stdout);
    assert_eq!(code.stdout, std::fs::read(fixture("fig3.code")).unwrap());
}

#[test]
fn verify_exit_codes() {
    let ok = run(&["verify", fixture("fig2.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_of(&ok)["verdict"]["pass"], Value::Bool(true));

    // zero one entry of the sparse frame
    let mut doc: Value = serde_json::from_slice(&std::fs::read(fixture("fig1.json")).unwrap()).unwrap();
    doc["signs"][0][0] = Value::from(0);
    let bad = run_with_stdin(&["verify", "-"], doc.to_string().as_bytes());
    assert_eq!(bad.status.code(), Some(1));
    let report = json_of(&bad);
    assert_eq!(report["verdict"]["equiangular"], Value::Bool(false));
    assert!(report["equiangularity_witness"].is_array());

    assert_eq!(run(&["verify", "/nonexistent/frame.json"]).status.code(), Some(2));
    assert_eq!(run_with_stdin(&["verify", "-"], b"{not json").status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["design", "round-robin", "--v", "5"]).status.code(), Some(2));
}

#[test]
fn tolerance_comes_from_flag_or_environment() {
    // a unit-norm real frame nudged off equiangularity by about 1e-7
    let eps = 1e-7f64;
    let (c, s) = (eps.cos(), eps.sin());
    let doc = serde_json::json!({
        "m": 2, "n": 3, "scale": null,
        "entries": [
            [[1.0, 0.0], [-0.5, 0.0], [-0.5 * c + 0.75f64.sqrt() * s, 0.0]],
            [[0.0, 0.0], [0.75f64.sqrt(), 0.0], [-0.75f64.sqrt() * c - 0.5 * s, 0.0]]
        ],
        "provenance": {"kind": "unspecified"}
    })
    .to_string();
    assert_eq!(run_with_stdin(&["verify", "-"], doc.as_bytes()).status.code(), Some(1));
    assert_eq!(run_with_stdin(&["verify", "-", "--tol", "1e-5"], doc.as_bytes()).status.code(), Some(0));
    let mut cmd = etfkit();
    cmd.env("ETFKIT_TOL", "1e-5").args(["verify", "-"]).stdin(Stdio::piped()).stdout(Stdio::piped());
    let mut child = cmd.spawn().unwrap();
    child.stdin.take().unwrap().write_all(doc.as_bytes()).unwrap();
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(0));
}

#[test]
fn welch_bound_prints_exact_form() {
    let out = run(&["bound", "welch", "--m", "6", "--n", "16", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.333333333333"), "{text}");
    assert!(text.trim_end().ends_with("1/3"), "{text}");
    assert_eq!(run(&["bound", "welch", "--m", "6", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn text_format_mirrors_the_sign_grid() {
    let out = run(&["fixtures", "emit", "--which", "fig2"]);
    let text = run_with_stdin(&["frame", "naimark", "-"], &out.stdout);
    assert_eq!(text.status.code(), Some(0));
    let design = run(&["design", "round-robin", "--v", "4"]);
    let grid = run_with_stdin(&["frame", "steiner", "-", "--format", "text"], &design.stdout);
    let text = String::from_utf8(grid.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "1/sqrt(3) x");
    assert_eq!(lines[1], "+-+-+-+-00000000");
    assert_eq!(lines[6], "0000+--++--+0000");
}

#[test]
fn every_json_report_matches_its_schema() {
    let f1 = fixture("fig1.json");
    let f2 = fixture("fig2.json");
    let f3 = fixture("fig3.code");
    let (f1, f2, f3) = (f1.to_str().unwrap(), f2.to_str().unwrap(), f3.to_str().unwrap());
    let design = run(&["design", "round-robin", "--v", "6"]);
    assert_schema("design", &json_of(&design));
    let design_path = std::env::temp_dir().join(format!("etfkit-schema-design-{}.json", std::process::id()));
    std::fs::write(&design_path, &design.stdout).unwrap();
    let dp = design_path.to_str().unwrap();

    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("frame", vec!["frame", "steiner", dp, "--simplex", "dft"]),
        ("frame", vec!["frame", "kirkman", dp, "--simplex", "dft", "--basis", "dft"]),
        ("frame", vec!["frame", "harmonic", "--q", "3", "--j", "1"]),
        ("frame", vec!["frame", "naimark", f2]),
        ("frame", vec!["frame", "real-kirkman", "--k", "2", "--w", "3", "--build"]),
        ("validation-report", vec!["design", "validate", dp]),
        ("design-params", vec!["design", "params", "--k", "3", "--v", "15"]),
        ("design-params", vec!["design", "params", "--k", "3", "--v", "7"]),
        ("etf-certificate", vec!["verify", f1]),
        ("match-report", vec!["analyze", "gram-equal", f1, f2]),
        ("mcfarland-comparison", vec!["frame", "mcfarland-vs-kirkman", "--q", "3", "--j", "1"]),
        ("real-kirkman-report", vec!["frame", "real-kirkman", "--k", "2", "--w", "11"]),
        ("spark-report", vec!["analyze", "spark", f1]),
        ("rip-report", vec!["analyze", "rip", f2, "--L", "3"]),
        ("steiner-rip-report", vec!["analyze", "steiner-rip", f1]),
        ("code-check", vec!["code", "check", f3]),
        ("welch-bound", vec!["bound", "welch", "--m", "12", "--n", "45"]),
        ("welch-bound", vec!["bound", "welch", "--m", "3", "--n", "5"]),
        ("grey-rankin-bound", vec!["bound", "grey-rankin", "--m", "6", "--delta", "2"]),
        ("grey-rankin-bound", vec!["bound", "grey-rankin", "--m", "6", "--delta", "1"]),
    ];
    for (schema, args) in cases {
        let out = run(&args);
        assert!(matches!(out.status.code(), Some(0 | 1)), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_schema(schema, &json_of(&out));
    }
    let _ = std::fs::remove_file(design_path);
}

#[test]
fn analysis_commands_report_expected_values() {
    let f1 = fixture("fig1.json");
    let spark = json_of(&run(&["analyze", "spark", f1.to_str().unwrap()]));
    assert_eq!(spark["spark"], Value::from(4));
    let cmp = run(&["frame", "mcfarland-vs-kirkman", "--q", "2", "--j", "1"]);
    assert_eq!(cmp.status.code(), Some(0));
    let check = run(&["code", "check", fixture("fig3.code").to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(json_of(&check)["grbe"]["distance"], Value::from(2));
    let nonresolvable = run(&["frame", "real-kirkman", "--k", "2", "--w", "1"]);
    assert_eq!(nonresolvable.status.code(), Some(1));
}

#[test]
fn out_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("etfkit-out-{}.json", std::process::id()));
    let out = run(&["design", "affine", "--q", "3", "--j", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("{\"v\":9,\"k\":3,"));
    let _ = std::fs::remove_file(path);
}

const FIG2_ROWS: [&str; 6] = [
    "+-+-+-+-+-+-+-+-",
    "+-+-+-+--+-+-+-+",
    "++--++--++--++--",
    "++----++++----++",
    "+--++--++--++--+",
    "+--+-++--++-+--+",
];

const FIG3_ROWS: [&str; 6] = [
    "01010101010101011010101010101010",
    "01010101101010101010101001010101",
    "00110011001100111100110011001100",
    "00111100001111001100001111000011",
    "01100110011001101001100110011001",
    "01101001100101101001011001101001",
];

#[test]
fn committed_fixtures_match_hand_entered_rows() {
    let doc: Value = serde_json::from_slice(&std::fs::read(fixture("fig2.json")).unwrap()).unwrap();
    assert_eq!(doc["scale_sq_inv"], Value::from(6));
    for (r, row) in FIG2_ROWS.iter().enumerate() {
        let got: String = doc["signs"][r]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| match s.as_i64().unwrap() { 1 => '+', -1 => '-', _ => '0' })
            .collect();
        assert_eq!(&got, row);
    }
    let text = std::fs::read_to_string(fixture("fig3.code")).unwrap();
    let words: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(words.len(), 32);
    for (r, row) in FIG3_ROWS.iter().enumerate() {
        let got: String = words.iter().map(|w| w.as_bytes()[r] as char).collect();
        assert_eq!(&got, row);
    }
}
