use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_semigroup-lab");

fn run(dir: &Path, sub: &str, config: &str, out: &str, seed: u64) -> Output {
    let cfg = dir.join(format!("{sub}-{out}.json"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .args([sub, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(["--seed", &seed.to_string()])
        .output()
        .unwrap()
}

fn read(dir: &Path, out: &str, file: &str) -> String {
    std::fs::read_to_string(dir.join(out).join(file)).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn birth_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "birth", r#"{"rates":"geom:2","lambda":[0.5,1,2],"N":50}"#, "b", 3);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(dir.path(), "b", "arrival.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# semigroup-lab v0.1.0 subcommand=birth seed=3");
    assert_eq!(lines.next().unwrap(), "lambda,product_value,bracket_width,defect_truncated");
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    for row in r {
        let lambda = row[0];
        // independent product over the first 200 factors
        let p: f64 = (0..200).map(|j| 1.0 / (1.0 + lambda / 2f64.powi(j))).product();
        assert!((row[1] - p).abs() < 1e-12);
        assert!(row[2] <= 1e-10);
        assert!((row[3] - row[1]).abs() < 1e-10);
    }
}

#[test]
fn minimal_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"rates":"poly:1:2","lambda":1,"N":30,"tol":1e-10}"#;
    let o = run(dir.path(), "minimal", cfg, "m", 0);
    assert!(o.status.success());
    let text = read(dir.path(), "m", "summary.json");
    let (header, body) = text.split_once('\n').unwrap();
    assert!(header.starts_with("# semigroup-lab v0.1.0 subcommand=minimal"));
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["trace_trajectory_monotone"], true);
    assert!(v["match_direct"].as_f64().unwrap() <= 1e-8);
    assert!(v["iterations"].as_u64().unwrap() > 1);
}

#[test]
fn empty_config_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "birth", "", "e", 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "birth", r#"{"rates":"geom:2","lambda":[1],"N":5,"lamda":2}"#, "u", 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
}

#[test]
fn bad_rate_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "birth", r#"{"rates":"geom:-2","lambda":[1],"N":5}"#, "r", 0);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_bias_check_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"rates":"geom:2","lambda":[1],"samples":1000,"horizon":100,"max_jumps":4}"#;
    let o = run(dir.path(), "trajectory", cfg, "t", 0);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"rates":"geom:2","lambda":[0.5,1],"samples":2000,"horizon":100,"max_jumps":64}"#;
    for out in ["a", "b"] {
        assert!(run(dir.path(), "trajectory", cfg, out, 42).status.success());
    }
    for f in ["laplace.csv", "n_events.csv"] {
        assert_eq!(read(dir.path(), "a", f), read(dir.path(), "b", f));
    }
    assert!(run(dir.path(), "trajectory", cfg, "c", 43).status.success());
    assert_ne!(read(dir.path(), "a", "laplace.csv"), read(dir.path(), "c", "laplace.csv"));
}

#[test]
fn every_subcommand_writes_headed_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("diffusion", r#"{"X":10,"h":0.05,"t":[0.01,0.1],"lambda":1}"#),
        ("nonstandard", r#"{"rates":"geom:2","N":12,"samples":10}"#),
        ("shift-demo", r#"{"X":4,"h":0.001,"psi":{"sine_bump":{"start":1,"end":2}}}"#),
    ];
    for (sub, cfg) in cases {
        let o = run(dir.path(), sub, cfg, sub, 5);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        for entry in std::fs::read_dir(dir.path().join(sub)).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            assert!(text.starts_with(&format!("# semigroup-lab v0.1.0 subcommand={sub} seed=5\n")));
            assert!(!text.contains('\r'));
        }
    }
    let density = read(dir.path(), "shift-demo", "density.csv");
    let last = rows(&density).pop().unwrap();
    assert!((last[2] - 0.375).abs() < 1e-6);
}

#[test]
fn help_lists_csv_columns() {
    let o = Command::new(BIN).args(["birth", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("lambda, product_value, bracket_width, defect_truncated"));
    let v = Command::new(BIN).arg("--version").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&v.stdout).trim(), "semigroup-lab 0.1.0");
}
