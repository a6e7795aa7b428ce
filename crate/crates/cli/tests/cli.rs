use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_choicekit"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = run(dir, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    o
}

/// Survey, population and raking sample in a fresh directory.
fn fixtures() -> TempDir {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "survey", "--n", "200", "--seed", "5", "--out", "syn"]);
    ok(d, &["synth", "--kind", "population", "--n", "150", "--seed", "6", "--out", "pop"]);
    ok(d, &["synth", "--kind", "sample", "--n", "400", "--seed", "7", "--out", "raking"]);
    dir
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn missing_column_is_an_input_error_naming_the_column() {
    let dir = fixtures();
    let d = dir.path();
    let text = fs::read_to_string(d.join("syn/survey.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let drop = header.iter().position(|h| *h == "car_min").unwrap();
    let mut out = String::new();
    for line in std::iter::once(header.join(",")).chain(lines.map(str::to_string)) {
        let cells: Vec<&str> = line.split(',').enumerate().filter(|(i, _)| *i != drop).map(|(_, c)| c).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(d.join("broken.csv"), out).unwrap();
    let o = run(d, &["estimate", "--model", "mnl", "--data", "broken.csv", "--out", "est"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("car_min"), "{}", stderr(&o));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = fixtures();
    let d = dir.path();
    fs::write(d.join("spec.toml"), "this is = = not toml").unwrap();
    let o = run(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--spec", "spec.toml", "--out", "est"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(d, &["--threads", "0", "synth", "--kind", "population", "--n", "5", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(d, &["synth", "--kind", "survey", "--n", "5", "--preset", "nonsense", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_reports_consistent_fit_statistics() {
    let dir = fixtures();
    let d = dir.path();
    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("est/result.json")).unwrap()).unwrap();
    assert_eq!(v["convergence"]["converged"], true);
    let k = v["k"].as_f64().unwrap();
    let ll = v["ll_final"].as_f64().unwrap();
    let aic = v["aic"].as_f64().unwrap();
    assert_eq!(k, 18.0);
    assert!((aic - (2.0 * k - 2.0 * ll)).abs() < 1e-9);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("est/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "estimate");
    assert_eq!(m["outputs"]["result.json"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn scenario_commands_write_the_grid() {
    let dir = fixtures();
    let d = dir.path();
    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est"]);
    let args = ["--params", "est/result.json", "--population", "pop/population.csv"];
    ok(d, &[&["simulate"][..], &args, &["--out", "sim"]].concat());
    let shares = csv_rows(&d.join("sim/shares.csv"));
    assert_eq!(shares.len(), 30);
    let shifts = csv_rows(&d.join("sim/shifts.csv"));
    assert_eq!(shifts.len(), 30 * 5 * 7);

    let o = ok(d, &[&["impact"][..], &args, &["--out", "imp"]].concat());
    assert!(stderr(&o).contains("default transit"));
    let rows = csv_rows(&d.join("imp/impacts.csv"));
    assert_eq!(rows.len(), 3 * 4 * 30);

    ok(d, &[&["impact"][..], &args, &["--no-adoption", "--out", "imp0"]].concat());
    let rows = csv_rows(&d.join("imp0/impacts.csv"));
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn emission_config_file_is_used() {
    let dir = fixtures();
    let d = dir.path();
    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est"]);
    fs::write(
        d.join("em.toml"),
        "variants = [\"baseline\"]\n[[scenario]]\nname = \"grid\"\ncar = 200.0\ntaxi = 100.0\nbike = 5.0\nwalk = 0.0\ntransit = \"metro\"\n",
    )
    .unwrap();
    let o = ok(
        d,
        &["impact", "--params", "est/result.json", "--population", "pop/population.csv", "--emissions", "em.toml", "--out", "imp"],
    );
    assert!(!stderr(&o).contains("default transit"));
    let rows = csv_rows(&d.join("imp/impacts.csv"));
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r[0] == "grid" && r[1] == "baseline"));
    let m = fs::read_to_string(d.join("imp/manifest.json")).unwrap();
    assert!(m.contains("em.toml"));
}

#[test]
fn edited_upstream_output_triggers_a_stale_warning() {
    let dir = fixtures();
    let d = dir.path();
    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est"]);
    let o = ok(d, &["simulate", "--params", "est/result.json", "--population", "pop/population.csv", "--out", "sim"]);
    assert!(!stderr(&o).contains("stale"));

    let mut text = fs::read_to_string(d.join("est/result.json")).unwrap();
    text.push('\n');
    fs::write(d.join("est/result.json"), text).unwrap();
    let o = ok(d, &["simulate", "--params", "est/result.json", "--population", "pop/population.csv", "--out", "sim2"]);
    assert!(stderr(&o).contains("stale input"), "{}", stderr(&o));
    let m = fs::read_to_string(d.join("sim2/manifest.json")).unwrap();
    assert!(m.contains("stale input"));

    // validating on different data than the estimate was fit on
    ok(d, &["synth", "--kind", "survey", "--n", "60", "--seed", "99", "--out", "other"]);
    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est2"]);
    let o = ok(d, &["validate", "--model", "mnl", "--data", "other/survey.csv", "--params", "est2/result.json", "--folds", "3", "--out", "val"]);
    assert!(stderr(&o).contains("stale input"), "{}", stderr(&o));
}

#[test]
fn weight_validate_and_bikeability_outputs() {
    let dir = fixtures();
    let d = dir.path();
    ok(d, &["weight", "--sample", "raking/sample.csv", "--out", "w"]);
    let margins = csv_rows(&d.join("w/margins.csv"));
    assert!(margins.iter().all(|r| r[4].parse::<f64>().unwrap().abs() < 1e-6));
    let weights = csv_rows(&d.join("w/weights.csv"));
    assert_eq!(weights.len(), 400);

    ok(d, &["estimate", "--model", "mnl", "--data", "syn/survey.csv", "--out", "est"]);
    ok(d, &["validate", "--model", "mnl", "--data", "syn/survey.csv", "--params", "est/result.json", "--folds", "3", "--out", "val"]);
    let vot = csv_rows(&d.join("val/vot.csv"));
    assert_eq!(vot.len(), 3);
    assert!(vot.iter().all(|r| r[2].parse::<f64>().unwrap() > 0.0));
    let cv = csv_rows(&d.join("val/cv.csv"));
    assert!(cv.iter().any(|r| r[0] == "accuracy" && r[1] == "overall"));

    ok(d, &["synth", "--kind", "bikeability", "--n", "300", "--seed", "2", "--out", "bk"]);
    ok(d, &["bikeability", "--data", "bk/bikeability.csv", "--out", "bko"]);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("bko/summary.json")).unwrap()).unwrap();
    assert_eq!(s["n"], 300);
    assert_eq!(csv_rows(&d.join("bko/classified.csv")).len(), 300);
}

#[test]
fn binary_model_is_rejected_for_validation() {
    let dir = fixtures();
    let o = run(dir.path(), &["validate", "--model", "bikeability", "--data", "syn/survey.csv", "--out", "v"]);
    assert_eq!(o.status.code(), Some(3));
}

fn pipeline(dir: &Path, out: &str, threads: &str) -> PathBuf {
    let o = dir.join(out);
    let p = |s: &str| o.join(s).to_string_lossy().into_owned();
    let t = ["--threads", threads];
    ok(dir, &[&t[..], &["weight", "--sample", "raking/sample.csv", "--out", &p("w")]].concat());
    ok(dir, &[&t[..], &["estimate", "--model", "mixl", "--data", "syn/survey.csv", "--draws", "50", "--seed", "3", "--out", &p("est")]].concat());
    let scen = ["--params", &p("est/result.json"), "--population", "pop/population.csv", "--draws", "50", "--seed", "3"];
    ok(dir, &[&t[..], &["simulate"], &scen, &["--out", &p("sim")]].concat());
    ok(dir, &[&t[..], &["impact"], &scen, &["--out", &p("imp")]].concat());
    o
}

fn numeric_outputs(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for sub in ["w", "est", "sim", "imp"] {
        let mut names: Vec<PathBuf> = fs::read_dir(root.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for path in names {
            if path.file_name().unwrap() != "manifest.json" {
                files.push((format!("{sub}/{}", path.file_name().unwrap().to_string_lossy()), fs::read(&path).unwrap()));
            }
        }
    }
    files
}

#[test]
fn pipeline_is_byte_identical_across_runs_and_threads() {
    let dir = fixtures();
    let d = dir.path();
    let a = numeric_outputs(&pipeline(d, "a", "1"));
    let b = numeric_outputs(&pipeline(d, "b", "1"));
    let c = numeric_outputs(&pipeline(d, "c", "4"));
    assert_eq!(a.len(), 6);
    for ((name, x), ((_, y), (_, z))) in a.iter().zip(b.iter().zip(&c)) {
        assert!(x == y, "{name} differs between runs");
        assert!(x == z, "{name} differs between thread counts");
    }
}
