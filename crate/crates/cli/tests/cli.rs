use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn evstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evstab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn validate(schema: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

fn json_of(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("not JSON ({e}): {}", stdout(o)))
}

#[test]
fn seq_values() {
    let o = evstab(&["seq", "--c", "2", "--n", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("a_4 = 417\n"));

    let o = evstab(&["seq", "--c", "3", "--n", "2", "--json"]);
    let v = json_of(&o);
    validate("seq.schema.json", &v);
    assert_eq!(v["a_n"], "4");
    assert_eq!(v["a_n_square"], true);
    assert_eq!(v["b_status"]["status"], "RATIONAL_NONSQUARE");

    let o = evstab(&["seq", "--c", "-1", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_single_values() {
    for (c, case) in [("-16", 2), ("48", 6), ("288", 5), ("-64", 4), ("10", 7)] {
        let o = evstab(&["classify", "--c", c]);
        assert_eq!(o.status.code(), Some(0), "c = {c}");
        let v = json_of(&o);
        validate("classify.schema.json", &v);
        assert_eq!(v["case"], case);
        assert_eq!(v["status"]["state"], "VERIFIED");
    }
}

#[test]
fn classify_range_and_summary() {
    let o = evstab(&["classify", "--range", "-50..50", "--effort", "fast"]);
    let v = json_of(&o);
    validate("classify.schema.json", &v);
    assert_eq!(v.as_array().unwrap().len(), 99);

    let o = evstab(&["classify", "--range", "-2000..2000", "--summary"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    validate("classify.schema.json", &v);
    assert_eq!(v["count"], 3999);
    assert_eq!(v["verified"], 3999);
}

#[test]
fn classify_conditional_effort_exits_3() {
    // Residuals stop at n = 1, so the indices below the sieve start stay open.
    let o = evstab(&["classify", "--c", "48", "--horizon", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let v = json_of(&o);
    validate("classify.schema.json", &v);
    assert_eq!(v["status"]["state"], "CONDITIONAL");
    assert!(v["status"]["unchecked"].as_array().unwrap().iter().any(|u| u == "q1: n = 6"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(evstab(&["classify"]).status.code(), Some(2));
    assert_eq!(evstab(&["classify", "--range", "5..1"]).status.code(), Some(2));
    assert_eq!(evstab(&["bogus"]).status.code(), Some(2));
    assert_eq!(evstab(&["stab-verify", "--x", "ten"]).status.code(), Some(2));
}

#[test]
fn jobs_do_not_change_output() {
    let a = evstab(&["--jobs", "1", "classify", "--range", "-300..300"]);
    let b = evstab(&["--jobs", "4", "classify", "--range", "-300..300"]);
    assert_eq!(a.stdout, b.stdout);
    let a = evstab(&["--jobs", "1", "density", "--c", "5", "--bound", "20000"]);
    let b = evstab(&["--jobs", "3", "density", "--c", "5", "--bound", "20000"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stab_verify_with_trace() {
    let dir = std::env::temp_dir().join(format!("evstab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("trace.json");
    let o = evstab(&["stab-verify", "--x", "10^20", "--check", "--emit-trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    validate("stab_verify.schema.json", &v);
    assert_eq!(v["rejected"].as_array().unwrap().len(), 0);
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    validate("stab_certificate.schema.json", &cert);
    assert_eq!(cert["x"], "100000000000000000000");

    let o = evstab(&["stab-verify", "--x", "4"]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn table1_static_and_regenerated() {
    let o = evstab(&["table1"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "3: 1, 2"));
    // Known differing rows make the comparison exit 1.
    let o = evstab(&["table1", "--regen"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("modulus 37"));
}

#[test]
fn curve_lists() {
    let o = evstab(&["curves", "--id", "E92", "--height", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    validate("curves.schema.json", &v);
    let xs: Vec<&str> = v[0]["points"].as_array().unwrap().iter().map(|p| p["x"].as_str().unwrap()).collect();
    assert_eq!(xs, ["-1", "0", "1", "3", "5", "56"]);
    let all = json_of(&evstab(&["curves", "--height", "200"]));
    validate("curves.schema.json", &all);
    assert_eq!(all.as_array().unwrap().len(), 6);
}

#[test]
fn density_outputs() {
    let o = evstab(&["density", "--c", "2", "--t", "0", "--bound", "100000", "--checkpoints", "1000,10000"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "bound,dividing,primes,fraction");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("100000,"));

    let o = evstab(&["density", "--c", "3", "--bound", "1000", "--format", "json"]);
    let v = json_of(&o);
    validate("density.schema.json", &v);
    assert_eq!(v["hypothesis_met"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hypothesis not met"));
}

#[test]
fn bounds_precision_from_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_evstab"))
        .args(["bounds", "--c", "6"])
        .env("EVSTAB_PRECISION", "256")
        .output()
        .unwrap();
    let v = json_of(&o);
    validate("bounds.schema.json", &v);
    assert_eq!(v["bits"], 256);
    assert_eq!(v["q"], "3/2");
    assert_eq!(evstab(&["bounds", "--c", "3"]).status.code(), Some(2));
}
