use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloneforge")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn clonoids_lists_bases() {
    let o = run(&["clonoids", "-p", "2", "-q", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["count"], 6);
    assert_eq!(v["formula"], 6);
    let cs = v["clonoids"].as_array().unwrap();
    assert_eq!(cs.len(), 6);
    assert!(cs.iter().all(|c| c["unary_basis"].is_array()));

    let o = run(&["clonoids", "-p", "2", "-q", "3", "--orientation", "qp"]);
    assert_eq!(json(&o)["count"], 4);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["clones", "-p", "4", "-q", "3"][..],
        &["clonoids", "-p", "3", "-q", "3"],
        &["frobnicate"],
        &["clones", "-p", "2"],
        &["clones", "-p", "2", "-q", "3", "--work-arity", "2"],
        &["clones", "-p", "2", "-q", "3", "--filter", "abelian"],
        &["classify", "-i", "/nonexistent/table.txt"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

fn run_capped(cap: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloneforge")).args(args).env("CLONEFORGE_MAX_PRODUCT", cap).output().unwrap()
}

#[test]
fn resource_limits_exit_3() {
    let o = run(&["clonoids", "-p", "5", "-q", "11"]);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());
    // the environment variable moves the cap both ways
    assert_eq!(code(&run_capped("5", &["clonoids", "-p", "2", "-q", "3"])), 3);
    // past the cap, the 5^11 unary scan is still refused
    let o = run_capped("60", &["clonoids", "-p", "5", "-q", "11"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("scan limit"));
}

#[test]
fn verify_reports_json() {
    let o = run(&["verify", "-p", "2", "-q", "3", "--format", "json", "--jobs", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["counts"]["clones"], 156);
    assert_eq!(v["counts"]["gamma_image"], 6);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn clones_export_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lattice.json");
    let path = path.to_str().unwrap();
    let o = run(&["clones", "-p", "2", "-q", "3", "--seed", "1", "-o", path]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let graph: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 156);
    assert_eq!(graph["work_arity"], 3);

    // exporting the saved graph matches enumerating straight to CSV
    let csv = run(&["clones", "-p", "2", "-q", "3", "--format", "csv", "--seed", "2"]);
    let exported = run(&["export", "-i", path, "--format", "csv"]);
    assert_eq!(code(&exported), 0);
    assert_eq!(csv.stdout, exported.stdout);
    assert_eq!(String::from_utf8_lossy(&csv.stdout).lines().count(), 157);

    let dot = run(&["clones", "-p", "2", "-q", "3", "--filter", "diamond", "--format", "dot"]);
    assert_eq!(code(&dot), 0);
    let text = String::from_utf8(dot.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches(" [label=").count(), 20);

    let broken = write(dir.path(), "broken.json", "{\"p\": 2}");
    assert_eq!(code(&run(&["export", "-i", &broken, "--format", "dot"])), 2);
}

#[test]
fn poly_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "f.json",
        r#"{"p":2,"q":3,"coeff_arity":1,"terms":[{"exp":[1],"coeff":[0,1,1]},{"exp":[1,1],"coeff":[1,0,1]}]}"#,
    );
    let o = run(&["poly", "extract", "-i", &f]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let ex = v["extractions"].as_array().unwrap();
    assert_eq!(ex.len(), 2);
    assert!(ex.iter().all(|e| e["replayed"] == true && e["derivation"]["steps"].is_array()));

    // x0^3 x1^2 reduces to x0 x1 over Z_2
    let raw = write(dir.path(), "raw.json", r#"{"p":2,"q":3,"coeff_arity":1,"terms":[{"exp":[3,2],"coeff":[1,1,0]}]}"#);
    let o = run(&["poly", "reduce", "-i", &raw]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["terms"][0]["exp"], serde_json::json!([1, 1]));
    assert_eq!(v["terms"][0]["coeff"], serde_json::json!([1, 1, 0]));

    // x0 x1 with x1 := x0 is x0^2 = x0
    let comp = write(
        dir.path(),
        "compose.json",
        r#"{"outer":{"p":2,"q":3,"coeff_arity":1,"terms":[{"exp":[1,1],"coeff":[1,1,1]}]},
            "at":[1],
            "inner":[{"p":2,"q":3,"coeff_arity":1,"terms":[{"exp":[1],"coeff":[1,1,1]}]}]}"#,
    );
    let o = run(&["poly", "compose", "-i", &comp]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["terms"][0]["exp"], serde_json::json!([1]));

    let bad = write(dir.path(), "bad.json", r#"{"p":2,"q":3,"coeff_arity":1,"terms":[{"exp":[2],"coeff":[1,1,1]}]}"#);
    assert_eq!(code(&run(&["poly", "extract", "-i", &bad])), 2);
}

#[test]
fn classify_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    // the identity on Z_2 x Z_3, index x + 2 y
    let id = "2 3 1 0 0 1 0 0 1 1 1 0 2 1 2";
    let text = write(dir.path(), "id.txt", id);
    let o = run(&["classify", "-i", &text]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["preserves_pi1"], true);
    assert_eq!(v["affine_in_second"], true);

    // y^2 in the Z_3 block breaks [pi1, pi1] = 0
    let sq = "2 3 1 0 0 1 0 0 1 1 1 0 1 1 1";
    let two = write(dir.path(), "two.txt", &format!("{id}\n{sq}\n"));
    let v = json(&run(&["classify", "-i", &two]));
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1]["preserves_pi1_pi1_zero"], false);

    let js = write(dir.path(), "id.json", r#"{"p":2,"q":3,"arity":1,"table":[[0,0],[1,0],[0,1],[1,1],[0,2],[1,2]]}"#);
    assert_eq!(json(&run(&["classify", "-i", &js])), json(&run(&["classify", "-i", &text])));

    let short = write(dir.path(), "short.txt", "2 3 1 0 0");
    assert_eq!(code(&run(&["classify", "-i", &short])), 2);
}
