use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso-rt"))
        .args(args)
        .env("ANISO_RT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn analyze_inline_and_file() {
    let out = run(&["analyze-simplex", "--vertices", "0,0;1,0;0,1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["report"]["good_element"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tet.txt");
    fs::write(&path, "# a tetrahedron\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let out = run(&["analyze-simplex", "--vertices", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["report"]["dim"], 3);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["interp-error", "--simplex", "0,0;1,0;0,1", "--p", "3"]).status.code(), Some(1));
    assert_eq!(run(&["analyze-simplex", "--vertices", "0,0;1,0;2,0"]).status.code(), Some(2));
    assert_eq!(run(&["study", "--family", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["counterexample", "--k", "5"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn mesh_generation_then_audit() {
    let out = run(&["generate-mesh", "--family", "needle_2d:2", "--level", "2"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("needle.mesh");
    let summary = dir.path().join("summary.json");
    fs::write(&mesh, &out.stdout).unwrap();

    let out = run(&[
        "audit-mesh",
        "--mesh",
        mesh.to_str().unwrap(),
        "--format",
        "csv",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("element,h,volume,"));
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["elements"].as_u64().unwrap() as usize, csv.lines().count() - 1);

    // A cap with gamma0 = 1 is not good, and --require-good reports it.
    fs::write(&mesh, "dim 2\nnodes 3\n0 0\n1 0\n0.5 0.001\nelements 1\n0 1 2\n").unwrap();
    let out = run(&["audit-mesh", "--mesh", mesh.to_str().unwrap(), "--require-good"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn empty_and_malformed_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("m.mesh");
    fs::write(&mesh, "dim 2\nnodes 0\nelements 0\n").unwrap();
    let out = run(&["audit-mesh", "--mesh", mesh.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(json(&out)["summary"]["elements"], 0);

    fs::write(&mesh, "dim 2\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 7\n").unwrap();
    let out = run(&["audit-mesh", "--mesh", mesh.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn interp_error_single_variant() {
    let out = run(&["interp-error", "--simplex", "0,0;1,0;0,0.01", "--variant", "rt62", "--field", "poly2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["lhs"].as_f64().unwrap() > 0.0);
    assert!(v["ratio"].as_f64().unwrap().is_finite());

    // Three-dimensional-only variants are rejected on triangles.
    let out = run(&["interp-error", "--simplex", "0,0;1,0;0,1", "--variant", "rt616"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn study_csv_with_summary_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let out = run(&[
        "study", "--family", "needle_2d:2", "--levels", "4", "--summary", summary.to_str().unwrap(), "--check",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "level");
    assert_eq!(*header.last().unwrap(), "order");
    assert_eq!(csv.lines().count(), 5);
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["summary"]["bounded"]["rt62"], true);

    assert_eq!(run(&["study", "--family", "needle_2d", "--levels", "2"]).status.code(), Some(2));
}

#[test]
fn study_is_independent_of_thread_count() {
    let args = ["study", "--family", "tet_type_i", "--levels", "3", "--format", "json"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_aniso-rt"))
        .args(args)
        .env("ANISO_RT_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn counterexample_output() {
    let out = run(&["counterexample"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("I v = (0.3333333333333333*x1, 0.3333333333333333*x2)"));
    assert!(text.contains("PASS"));
    let v = json(&run(&["counterexample", "--json"]));
    let err = v["report"]["first_component_error"].as_f64().unwrap();
    assert!((err - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-12);
}

#[test]
fn sweep_is_reproducible() {
    let args = ["sweep", "--lemma", "rt12", "--samples", "30", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["all_finite"], true);
}
