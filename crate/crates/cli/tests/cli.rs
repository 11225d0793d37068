use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_branchlink"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn branchlink")
}

fn ok_json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn ok_text(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("branchlink-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write(dir: &PathBuf, file: &str, v: &Value) -> String {
    let p = dir.join(file);
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> (String, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let config = lines.next().unwrap().to_string();
    let _header = lines.next().unwrap();
    (config, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn circle(center: [f64; 3], r: f64, plane: usize, n: usize, phase: f64) -> Value {
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let t = phase + std::f64::consts::TAU * i as f64 / n as f64;
            let (a, b) = (r * t.cos(), r * t.sin());
            let mut p = center;
            match plane {
                0 => {
                    p[0] += a;
                    p[1] += b;
                }
                _ => {
                    p[0] += a;
                    p[2] += b;
                }
            }
            p
        })
        .collect();
    json!({ "closed": true, "vertices": pts })
}

#[test]
fn sheaves_link_k_to_the_fourth() {
    let v = ok_json(&["linking", "--spaghetton", "2"]);
    assert_eq!(v["total_linking"], 16);
    assert_eq!(v["config"]["command"]["subcommand"], "linking");
}

#[test]
fn hopf_link_from_files() {
    let dir = scratch("hopf-link");
    let a = write(&dir, "a.json", &circle([0.0; 3], 1.0, 0, 64, 0.0));
    let b = write(&dir, "b.json", &circle([1.0, 0.0, 0.0], 1.0, 1, 64, std::f64::consts::PI / 64.0));
    let v = ok_json(&["linking", &a, &b]);
    assert_eq!(v["linking"].as_i64().map(i64::abs), Some(1), "{v}");
    let far = write(&dir, "c.json", &circle([5.0, 0.0, 0.0], 1.0, 1, 64, 0.1));
    let v = ok_json(&["linking", &a, &far]);
    assert_eq!(v["linking"].as_i64(), Some(0), "{v}");
}

#[test]
fn budget_partial_sums_are_monotone_and_config_is_echoed() {
    let text = ok_text(&["budget", "--N", "1000"]);
    let (config, rows) = csv_rows(&text);
    assert!(config.starts_with("# config {"), "{config}");
    assert!(config.contains("\"subcommand\":\"budget\""));
    assert_eq!(rows.len(), 3);
    let col = |j: usize| rows.iter().map(|r| r[j].parse::<f64>().unwrap()).collect::<Vec<_>>();
    for j in [3, 4] {
        let c = col(j);
        assert!(c.windows(2).all(|w| w[1] > w[0]), "column {j}: {c:?}");
    }
    let (s3, lo) = (col(4), col(6));
    assert!(s3.iter().zip(&lo).all(|(s, l)| s >= l));
}

#[test]
fn solve_output_is_deterministic_across_thread_counts() {
    let args = ["solve", "--grid", "2,3", "--alpha", "0.5", "--seed", "7", "--iterations", "30"];
    let a = run(&args);
    let b = run(&args);
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let c = run(&one);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let (lo, up) = (v["lower"].as_f64().unwrap(), v["value"].as_f64().unwrap());
    assert!(0.0 < lo && lo <= up);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["hopf", "--field", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["budget", "--N", "1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["solve", "--grid", "2,400", "--alpha", "0.5"]).status.code(), Some(2));
    let o = run(&["hopf", "--field", "gadget:1,0.01", "--res", "12"]);
    assert_eq!(o.status.code(), Some(1), "coarse lattice is refused: {}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["hopf", "--field", "gadget:1,0.01", "--res", "64"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical"));
}

#[test]
fn hopf_invariants_of_simple_fields() {
    let v = ok_json(&["hopf", "--field", "stadium", "--res", "64"]);
    assert_eq!(v["value"], 0);
    let v = ok_json(&["hopf", "--field", "hopfmap", "--res", "32"]);
    assert_eq!(v["value"].as_i64().map(i64::abs), Some(1));
    assert!(v["runtime"].is_number());
}

#[test]
fn validate_graph_accepts_solver_output_and_rejects_broken_flux() {
    let dir = scratch("validate");
    let v = ok_json(&["solve", "--grid", "2,2", "--alpha", "0.5", "--iterations", "10"]);
    let good = write(&dir, "good.json", &v["graph"]);
    let r = ok_json(&["validate-graph", &good, "--alpha", "0.5"]);
    assert_eq!(r["valid"], true);
    assert!((r["cost"].as_f64().unwrap() - v["value"].as_f64().unwrap()).abs() < 1e-6);

    let mut broken = v["graph"].clone();
    broken["edges"].as_array_mut().unwrap().pop();
    let bad = write(&dir, "bad.json", &broken);
    let o = run(&["validate-graph", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["valid"], false);
    assert!(!r["violations"].as_array().unwrap().is_empty());
}

#[test]
fn solve_points_and_charged_files() {
    let dir = scratch("solve-files");
    let pts = write(&dir, "pts.json", &json!([[0.5, 0.5], [0.25, 0.5]]));
    let v = ok_json(&["solve", "--points", &pts, "--alpha", "1", "--iterations", "10"]);
    // With alpha = 1 both points go straight to the nearest side.
    assert!((v["value"].as_f64().unwrap() - 0.75).abs() < 1e-9, "{v}");
    assert_eq!(v["sources"], 2);

    let boxed = write(&dir, "boxed.json", &json!({"points": [[1.0, 1.0]], "domain": {"dim": 2, "lo": [0.0, 0.0], "hi": [2.0, 3.0]}}));
    let v = ok_json(&["solve", "--points", &boxed, "--alpha", "0.5", "--iterations", "5"]);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9, "{v}");

    let charged = write(&dir, "charged.json", &json!({"positives": [[0.0, 0.0]], "negatives": [[3.0, 4.0]]}));
    let v = ok_json(&["solve", "--charged", &charged, "--alpha", "0.5", "--iterations", "5"]);
    assert!((v["value"].as_f64().unwrap() - 5.0).abs() < 1e-9, "{v}");
}

#[test]
fn scaling_tables() {
    let text = ok_text(&["grid-scaling", "--ks", "2,4", "--alpha", "0.5", "--iterations", "20"]);
    let (config, rows) = csv_rows(&text);
    assert!(config.contains("grid-scaling"));
    assert_eq!(rows.len(), 2);
    let v = ok_json(&["grid-scaling", "--ks", "2,4", "--alpha", "0.5", "--iterations", "20", "--json"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["grid-scaling", "--ks", "2,4", "--model", "nu3"]).status.code(), Some(1));

    let text = ok_text(&["singularities", "--ks", "1,2", "--iterations", "20"]);
    let (_, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let (lo, up) = (r[2].parse::<f64>().unwrap(), r[3].parse::<f64>().unwrap());
        assert!(lo <= up + 1e-12);
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = scratch("out");
    let p = dir.join("budget.csv");
    let o = run(&["budget", "--N", "100", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("# config "));
}
