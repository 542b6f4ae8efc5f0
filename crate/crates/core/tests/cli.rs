use std::fs;
use std::path::Path;
use std::process::Command;

use gpv::field::dump::{dump_complex, FieldMeta};
use gpv::field::{ComplexField, Grid2D};
use num_complex::Complex64;

fn gpv(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gpv")).args(args).env_remove("GPV_CONFIG").output().unwrap()
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn derive_reports_exact_constants() {
    let dir = tempfile::tempdir().unwrap();
    let eps = (-4.0f64).exp();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"params": {{"epsilon": {eps}, "omega": 64}}}}"#));
    let out = dir.path().join("out");
    let o = gpv(&["--config", &cfg, "--out", out.to_str().unwrap(), "derive"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out.join("derive.json"));
    assert_eq!(d["kind"], "derive");
    assert!((d["ell"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((d["h_ex"].as_f64().unwrap() - 16.0).abs() < 1e-9);
    assert_eq!(d["provenance"]["config"]["params"]["omega"], 64.0);
    assert!(out.join("bulk_axes.csv.meta.json").exists());
}

#[test]
fn vortices_of_a_constant_field_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid2D::new(40, 1.0).unwrap();
    let stem = dir.path().join("one");
    let v = ComplexField::constant(grid, Complex64::new(1.0, 0.0));
    dump_complex(&stem, &v, &FieldMeta::new(&grid, 0.05, 10.0, 1.0, "test")).unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"input": {:?}}}"#, stem.display().to_string()));
    let out = dir.path().join("out");
    let o = gpv(&["--config", &cfg, "--out", out.to_str().unwrap(), "vortices"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("vortices.csv")).unwrap();
    assert_eq!(table.trim(), "x,y,radius,degree");
    assert_eq!(json(&out.join("vortices.json"))["count"], 0);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = config(dir.path(), "bad.json", r#"{"params": {"epsilon": "x"}}"#);
    assert_eq!(gpv(&["--config", &bad, "--out", out, "derive"]).status.code(), Some(2));
    let unsorted = config(dir.path(), "uns.json", r#"{"sweep": {"epsilons": [0.02, 0.05, 0.03]}}"#);
    assert_eq!(gpv(&["--config", &unsorted, "--out", out, "sweep"]).status.code(), Some(2));
    let regime = config(dir.path(), "reg.json", r#"{"params": {"omega": 100}}"#);
    assert_eq!(gpv(&["--config", &regime, "--out", out, "trial"]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(gpv(&["--config", missing.to_str().unwrap(), "--out", out, "derive"]).status.code(), Some(5));
    assert_eq!(gpv(&["--out", out, "plot", missing.to_str().unwrap()]).status.code(), Some(5));
    assert_eq!(gpv(&["--out", out, "vortices"]).status.code(), Some(5));
}

#[test]
fn sweep_is_deterministic_and_plottable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"sweep": {"epsilons": [0.1, 0.08]}}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = gpv(&["--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3", "sweep"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("epsilon,omega,energy,target,ratio,vortex_count,density,density_over_2pi\n"));
    assert_eq!(text.lines().count(), 3);

    let plots = dir.path().join("plots");
    let o = gpv(&["--out", plots.to_str().unwrap(), "plot", a.join("sweep.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(plots.join("energy_ratio.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("source,epsilon,omega,ratio,energy"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn single_report_gives_single_row_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"sweep": {"epsilons": [0.1]}}"#);
    let out = dir.path().join("s");
    assert!(gpv(&["--config", &cfg, "--out", out.to_str().unwrap(), "sweep"]).status.success());
    let plots = dir.path().join("plots");
    assert!(gpv(&["--out", plots.to_str().unwrap(), "plot", out.join("sweep.json").to_str().unwrap()]).status.success());
    let table = fs::read_to_string(plots.join("energy_ratio.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
}
