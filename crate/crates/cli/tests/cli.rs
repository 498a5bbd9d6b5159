use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smoothdiv"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).env("SMOOTHDIV_THREADS", "1").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn pure_qubit(dir: &Path, name: &str, a: f64, b: f64) -> PathBuf {
    let text = format!(
        r#"{{"format_version":"1","kind":"density","dim":2,"data":[[[{},0],[{},0]],[[{},0],[{},0]]]}}"#,
        a * a,
        a * b,
        a * b,
        b * b
    );
    write(dir, name, &text)
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn compute_dh_on_pure_pair() {
    let d = tempfile::tempdir().unwrap();
    // overlap f = 0.9
    pure_qubit(d.path(), "r.json", 1.0, 0.0);
    pure_qubit(d.path(), "s.json", 0.9f64.sqrt(), 0.1f64.sqrt());
    let v = stdout_json(&run(&["compute", "dh", "--rho", "r.json", "--sigma", "s.json", "--eps", "0.1"], d.path()));
    assert!((v["value"].as_f64().unwrap() - 0.643_856_189_774_724_7).abs() < 1e-8);
    assert_eq!(v["divergence"], "dh");
    assert_eq!(v["parameters"]["eps"], 0.1);
    assert_eq!(v["inputs"]["rho_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn compute_trivial_values() {
    let d = tempfile::tempdir().unwrap();
    pure_qubit(d.path(), "a.json", 1.0, 0.0);
    pure_qubit(d.path(), "b.json", 0.0, 1.0);
    write(d.path(), "m.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.3,0.7]}"#);
    let v = stdout_json(&run(&["compute", "dmax", "--rho", "m.json", "--sigma", "m.json"], d.path()));
    assert!(v["value"].as_f64().unwrap().abs() < 1e-12);
    let v = stdout_json(&run(&["compute", "dtilde", "--rho", "a.json", "--sigma", "b.json", "--eps", "0.05"], d.path()));
    assert_eq!(v["value"], "inf");
}

#[test]
fn parse_errors_name_the_field() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "ok.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.5,0.5]}"#);
    let cases = [
        (r#"{"format_version":"2","kind":"classical","dim":2,"data":[0.5,0.5]}"#, "format_version"),
        (r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.5,0.6]}"#, "data"),
        (r#"{"format_version":"1","kind":"density","dim":2,"data":[[[1,0],[0,0]],[[0,0],"x"]]}"#, "data[1][1]"),
        (r#"{"format_version":"1","kind":"cl","dim":2,"data":[0.5,0.5]}"#, "kind"),
        (r#"{"format_version":"1","kind":"classical","data":[0.5,0.5]}"#, "dim"),
    ];
    for (text, field) in cases {
        write(d.path(), "bad.json", text);
        let o = run(&["compute", "umegaki", "--rho", "bad.json", "--sigma", "ok.json"], d.path());
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("'{field}'")), "{err}");
    }
}

#[test]
fn domain_errors_exit_3() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "m.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.3,0.7]}"#);
    let o = run(&["compute", "dtilde", "--rho", "m.json", "--sigma", "m.json", "--eps", "1.5"], d.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_rows_monotone_and_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = ["sweep", "dtilde", "--ensemble", "hs_mixed", "--dims", "2", "--samples", "10", "--seed", "3"];
    let a = run(&[&args[..], &["--out", "a.csv"]].concat(), d.path());
    let b = run(&[&args[..], &["--out", "b.csv"]].concat(), d.path());
    assert!(a.status.success() && b.status.success());
    let ta = std::fs::read(d.path().join("a.csv")).unwrap();
    assert_eq!(ta, std::fs::read(d.path().join("b.csv")).unwrap());

    let mut r = csv::Reader::from_reader(&ta[..]);
    assert_eq!(r.headers().unwrap(), vec!["seed", "dim", "eps", "value", "method", "residual"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 10 * 15);
    let val = |s: &str| if s == "inf" { f64::INFINITY } else { s.parse::<f64>().unwrap() };
    for w in rows.windows(2) {
        if w[0][0] == w[1][0] {
            assert!(val(&w[1][3]) <= val(&w[0][3]) + 1e-12);
        }
    }
}

#[test]
fn verify_frenkel_on_classical_pair() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "r.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.75,0.25]}"#);
    write(d.path(), "s.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.5,0.5]}"#);
    let o = run(&["verify", "frenkel", "--rho", "r.json", "--sigma", "s.json", "--out", "rep.json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("rep.json")).unwrap()).unwrap();
    let w = &rep["relations"][0]["witness"];
    assert!((w["lhs"].as_f64().unwrap() - 0.188_721_875_540_867).abs() < 1e-6);
    assert_eq!(rep["config"]["rho"], "r.json");
}

#[test]
fn verify_identical_pair_is_trivial() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "r.json", r#"{"format_version":"1","kind":"classical","dim":2,"data":[0.4,0.6]}"#);
    let o = run(
        &["verify", "structural", "--rho", "r.json", "--sigma", "r.json", "--eps", "0.1,0.5", "--mu", "6", "--out", "rep.json"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rerun_from_embedded_config_reproduces_relations() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify", "equivalence", "--dims", "2", "--samples", "2", "--seed", "5", "--eps", "0.2,0.6", "--out", "a.json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "equivalence", "--config", "a.json", "--out", "b.json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("a.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(a["relations"], b["relations"]);
    assert_eq!(a["config"]["seed"], 5);
}

#[test]
fn failing_relation_exits_1_and_still_writes_report() {
    let d = tempfile::tempdir().unwrap();
    // finite-n exponents approach their limits from above, so the trend check fails
    let o = run(
        &["verify", "exponents", "--dims", "2", "--samples", "1", "--ensembles", "hs_mixed", "--out", "rep.json"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("rep.json")).unwrap()).unwrap();
    assert_eq!(rep["passed"], false);
    assert!(!rep["sequences"].as_array().unwrap().is_empty());
}

#[test]
fn sample_writes_readable_states() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["sample", "--ensemble", "haar_pure", "--dim", "3", "--seed", "9", "--rho", "r.json", "--sigma", "s.json"], d.path());
    assert!(o.status.success());
    let v = stdout_json(&run(&["compute", "umegaki", "--rho", "r.json", "--sigma", "s.json"], d.path()));
    assert_eq!(v["value"], "inf");
}
