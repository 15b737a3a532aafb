use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_octoalg"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn enumerate_writes_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["enumerate", "--candidates", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let tables: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("table_"))
        .collect();
    assert_eq!(tables.len(), 16);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["count"], 16);
    let classes = summary["chirality_classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    assert!(classes.iter().all(|c| c.as_array().unwrap().len() == 8));
    let candidates = summary["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 128);
    assert_eq!(candidates.iter().filter(|c| c["alternative"] == true).count(), 16);

    let first = std::fs::read_to_string(dir.path().join("table_00.txt")).unwrap();
    let parsed = octoalg::algebra::StructureTable::from_text(&first).unwrap();
    assert_eq!(parsed, octoalg::algebra::StructureTable::octonion_reference());
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = run(&["enumerate", "--seed", "11"]);
    let b = run(&["enumerate", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["verify", "--suite", "leibniz", "--table", "O[3]", "--seed", "5"]);
    let d = run(&["verify", "--suite", "leibniz", "--table", "O[3]", "--seed", "5"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "--suite", "lorentz", "--table", "O[0]"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["reports"][0]["passed_cases"], 256);

    let out = run(&["verify", "--suite", "derivations", "--table", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = &json(&out)["reports"][0]["details"]["report"];
    assert_eq!(rep["der_dim"], 14);
    assert_eq!(rep["stabilizer_dims"], serde_json::json!([8, 8, 8, 8, 8, 8, 8]));

    let out = run(&["verify", "--suite", "pauli"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "WARN");
}

#[test]
fn tolerance_override_can_fail_a_suite() {
    let out = run(&["verify", "--suite", "leibniz", "--table", "O[1]", "--tolerance", "1e-18"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "FAIL");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--table", "O[16]"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "lorentz", "--table", "H"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"table\": \"C\",\n  \"factors\": [{\"kind\": \"sideways\"}]\n}\n").unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn pole_on_grid_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pole.json");
    std::fs::write(
        &path,
        r#"{"table":"C","factors":[{"kind":"passive","theta":[0,1],"t":1},{"kind":"active","theta":[0,1],"t":1,"a":0.0}]}"#,
    )
    .unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole on grid"));
}

#[test]
fn solve_configs() {
    let out = run(&["solve", "--config", config("complex.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["d_tilde"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);

    let out = run(&["solve", "--config", config("quaternion_two.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["symmetry_class"], "SU2");
    assert!(v["residual_fd"].as_f64().unwrap() <= 1e-8);

    let out = run(&["solve", "--config", config("octonion_three.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["symmetry_class"], "G2-type");
    assert!(v["reconstruction_residual"].as_f64().unwrap() <= 1e-10);

    // the two-field example at h = 1e-4 sits just above 1e-6 at the grid endpoint
    let out = run(&["solve", "--config", config("complex_two_fields.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!((json(&out)["residual_fd"].as_f64().unwrap() - 1.0277e-6).abs() < 2e-9);
}

#[test]
fn invariance_configs() {
    let out = run(&["invariance", "--config", config("invariance_complex.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["invariant"], true);
    let lambdas = v["lambdas"].as_array().unwrap();
    assert_eq!(lambdas.len(), 16);
    assert!(lambdas.iter().all(|l| l == &lambdas[0]));

    let out = run(&["invariance", "--config", config("invariance_negative.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["invariant"], false);
    assert!(v["witness"].is_u64());

    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("ext.json");
    let out = run(&[
        "invariance",
        "--config",
        config("invariance_extension.json").to_str().unwrap(),
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(written, json(&out));
    assert!(written["extension"]["bracketing_gap"].as_f64().unwrap() <= 1e-10);
}
