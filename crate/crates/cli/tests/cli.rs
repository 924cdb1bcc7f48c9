use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvcheck")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_spec(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn even_product_check_passes_with_json_report() {
    let o = run(&[
        "check",
        "catalog:product_spheres_2n",
        "--param",
        "n=2",
        "--param",
        "a=1",
        "--points",
        "10",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "curvcheck-report/1");
    let fc = v["results"].as_array().unwrap().iter().find(|r| r["check"] == "static_fC").unwrap();
    assert_eq!(fc["verdict"], "pass");
}

#[test]
fn sphere_check_exits_zero() {
    let o = run(&["check", "catalog:round_sphere", "--param", "n=4", "--param", "kappa=1", "--points", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn malformed_spec_file_exits_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(&dir, "broken.spec", "[manifold]\ndim = 2\n[metric]\ng_11 = 1 + (x1\ng_22 = 1\n");
    let o = run(&["check", &format!("file:{p}")]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(run(&["check", "catalog:no_such_entry"]).status.code(), Some(2));
    assert_eq!(run(&["check", "catalog:round_sphere", "--points", "0"]).status.code(), Some(2));
    assert_eq!(run(&["check", "catalog:round_sphere", "--order", "9"]).status.code(), Some(2));
    assert_eq!(run(&["check", "catalog:round_sphere", "--param", "bogus=1"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "catalog:round_sphere", "--tensor", "nope"]).status.code(), Some(2));
    let o = run(&["eval", "catalog:round_sphere", "--tensor", "g", "--point", "5,0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wrong_potential_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[manifold]\ncoords = x, y\n[metric]\ng_11 = 4/(1+x^2+y^2)^2\ng_22 = 4/(1+x^2+y^2)^2\n\
                [potential]\nf = x\n[tags]\nvacuum-static\n";
    let p = write_spec(&dir, "sphere.spec", text);
    let o = run(&["check", &p, "--checks", "vacuum_static_eq", "--points", "10"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn json_reports_are_reproducible_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&[
            "check",
            "catalog:schwarzschild",
            "--points",
            "12",
            "--seed",
            "5",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn eval_prints_known_values() {
    let o = run(&["eval", "catalog:round_sphere", "--param", "n=4", "--param", "kappa=1", "--tensor", "scalar", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["components"].as_f64().unwrap() - 12.0).abs() < 1e-10);

    let o = run(&["eval", "catalog:round_sphere", "--tensor", "weyl", "--point", "0.2,-0.1,0.3,0.05", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let flat = v["components"].to_string();
    let max = flat
        .split(['[', ']', ','])
        .filter_map(|x| x.parse::<f64>().ok())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    assert!(max < 1e-10);

    for frame in ["orthonormal", "normal"] {
        let o = run(&[
            "eval",
            "catalog:product_spheres_2n",
            "--param",
            "n=2",
            "--param",
            "a=1",
            "--tensor",
            "bach",
            "--point",
            "0.1,0.2,-0.3,0.4",
            "--frame",
            frame,
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let b11 = v["components"][0][0].as_f64().unwrap();
        assert!((b11 + 1.0 / 72.0).abs() < 1e-10, "{frame}: {b11}");
    }
}

#[test]
fn list_outputs() {
    let o = run(&["list", "catalog"]);
    assert!(stdout(&o).contains("product_spheres_2n"));
    let o = run(&["list", "checks"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("div3_T")).unwrap();
    assert!(line.contains("n >= 5"));
    let o = run(&["list", "checks", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().len() >= 20);
}

fn docs(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(rel)
}

#[test]
fn golden_reports_match_and_validate() {
    let schema: Value = serde_json::from_str(&fs::read_to_string(docs("report-schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let cases: [(&str, &[&str]); 2] = [
        ("examples/schwarzschild-report.json", &["check", "catalog:schwarzschild", "--points", "10", "--format", "json"]),
        (
            "examples/product-spheres-report.json",
            &[
                "check",
                "catalog:product_spheres_2n",
                "--points",
                "10",
                "--checks",
                "static_fC,bach_*,vacuum_static_eq",
                "--format",
                "json",
            ],
        ),
    ];
    for (golden, args) in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert_eq!(text, fs::read_to_string(docs(golden)).unwrap(), "{golden} drifted");
        let v: Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{golden}: {errors:?}");
    }
}

#[test]
fn failing_and_skipping_reports_validate() {
    let schema: Value = serde_json::from_str(&fs::read_to_string(docs("report-schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let o = run(&["check", "catalog:conformal_perturbation", "--points", "3", "--order", "4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(validator.is_valid(&v));
}

#[test]
fn documented_spec_examples_load() {
    for f in ["examples/round-sphere.spec", "examples/warped-torus.spec"] {
        let p = docs(f);
        let o = run(&["check", p.to_str().unwrap(), "--points", "5"]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
