use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gouq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gouq")).args(args).env_remove("GOUQ_SEED").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = gouq(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

/// Data rows of a CSV document (skipping `#` lines and the column header).
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn classify_examples() {
    let v = json(&["classify", "--c", "2", "--q", "0.4", "--r", "0.2"]);
    assert_eq!(v["id_mu"]["decision"], "No");
    assert_eq!(v["id_rho"]["witness"]["exact"], true);
    assert_eq!(v["meta"]["command"], "classify");

    let v = json(&["classify", "--c", "3", "--q", "0.5", "--r", "0"]);
    assert_eq!(v["continuity"]["decision"], "ContinuousSingular");
    assert_eq!(v["continuity"]["rule"], "pisot-number");

    let v = json(&["classify", "--c", "2.718281828", "--q", "0.3", "--r", "0"]);
    assert_eq!(v["continuity"]["decision"], "ContinuousSingular");
    assert_eq!(v["continuity"]["small_q_condition"], true);
    assert_eq!(v["meta"]["params"]["c"]["kind"], "float");
}

#[test]
fn exact_boundary_from_decimal_flags() {
    // 2p = q and r = 1/2 give p = qr exactly.
    let v = json(&["classify", "--c", "2", "--p", "0.5", "--q", "0", "--r", "0.5"]);
    assert_eq!(v["id_rho"]["decision"], "No");
    let third = "0.3333333333333333333333333333333333";
    let v = json(&["classify", "--c", "2", "--q", third, "--r", "0.5"]);
    assert_eq!(v["id_sym"]["decision"], "No");
}

#[test]
fn katti_entropy_tevolution() {
    let v = json(&["katti", "--q", "0.5", "--r", "0.2", "--p", "0.3", "--n", "10"]);
    assert_eq!(v["first_negative_index"], 2);

    let v = json(&["entropy", "--q", "0.5", "--r", "0"]);
    assert!((v["entropy"].as_f64().unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);

    let v = json(&["tevolution", "--c", "3", "--q", "0.5", "--r", "0"]);
    let t = v["t_low"].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0);
    assert!(!v["trace"].as_array().unwrap().is_empty());
    assert_eq!(v["singular_for_all_t"], true);
}

#[test]
fn cf_grid_properties() {
    let out =
        gouq(&["cf", "--c", "2", "--q", "0.5", "--r", "0.25", "--z-min", "-10", "--z-max", "10", "--steps", "201"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 201);
    let origin = &rows[100];
    assert_eq!(origin[0], 0.0);
    assert!((origin[3] - 1.0).abs() < 1e-15);
    for i in 0..100 {
        let (a, b) = (&rows[i], &rows[200 - i]);
        assert!((a[1] - b[1]).abs() < 1e-12 && (a[2] + b[2]).abs() < 1e-12);
    }
}

#[test]
fn cf_does_not_decay_along_powers_of_two() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut moduli = Vec::new();
    for k in [4, 8, 12] {
        let z = (two_pi * 2f64.powi(k)).to_string();
        let out = gouq(&["cf", "--c", "2", "--q", "0.5", "--r", "0", "--z-min", &z, "--z-max", &z, "--steps", "1"]);
        assert!(out.status.success());
        moduli.push(csv_rows(&String::from_utf8(out.stdout).unwrap())[0][3]);
    }
    assert!(moduli.iter().all(|&m| m > 1e-6));
    assert!((moduli[0] - moduli[2]).abs() < 1e-6);
}

#[test]
fn invalid_input_exits_2_without_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    let out = gouq(&["classify", "--c", "0.5", "--q", "0.3", "--r", "0.1", "--out", p]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c must be"));
    let out = gouq(&["classify", "--c", "2", "--q", "0.7", "--r", "0.5", "--out", p]);
    assert_eq!(out.status.code(), Some(2));
    let out = gouq(&["cf", "--c", "2", "--q", "0.3", "--r", "0.1", "--z-min", "3", "--z-max", "1", "--out", p]);
    assert_eq!(out.status.code(), Some(2));
    let out = gouq(&["classify", "--c", "2", "--u", "0", "--v", "1", "--w", "0", "--out", p]);
    assert_eq!(out.status.code(), Some(2));
    assert!(empty_dir(dir.path()));
}

fn empty_dir(dir: &Path) -> bool {
    std::fs::read_dir(dir).unwrap().next().is_none()
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = gouq(&[
            "sample",
            "--c",
            "3",
            "--q",
            "0.5",
            "--r",
            "0.2",
            "--n",
            "500",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# gouq "));
    assert!(text.contains("# seed: 7"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 500);
}

#[test]
fn seed_falls_back_to_environment() {
    let with_flag = gouq(&["sample", "--c", "2", "--q", "0.5", "--r", "0", "--n", "20", "--seed", "99"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_gouq"))
        .args(["sample", "--c", "2", "--q", "0.5", "--r", "0", "--n", "20"])
        .env("GOUQ_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(with_flag.stdout, with_env.stdout);
    let other = gouq(&["sample", "--c", "2", "--q", "0.5", "--r", "0", "--n", "20", "--seed", "98"]);
    assert_ne!(with_flag.stdout, other.stdout);
}

#[test]
fn simulate_path_dump_and_validation_exit_codes() {
    let out = gouq(&["simulate", "--c", "2", "--u", "2", "--v", "2", "--w", "1", "--horizon", "5", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("time,mark,n,y,integral"));
    assert!(text.lines().last().unwrap().contains(",5,"));

    let args = ["simulate", "--c", "2", "--u", "2", "--v", "2", "--w", "1", "--validate", "innovation", "--n", "10000"];
    let v = json(&[&args[..], &["--tv-max", "0.05"]].concat());
    assert_eq!(v["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = gouq(&[&args[..], &["--tv-max", "0", "--out", path.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn degenerate_simulation_is_allowed() {
    let out =
        gouq(&["simulate", "--c", "2", "--q", "0", "--r", "1", "--p", "0", "--horizon", "60", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["path"]["partial_integral"].as_f64().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn pisot_certificates() {
    let v = json(&["pisot", "--c", "golden"]);
    assert_eq!(v["certified"], true);
    assert_eq!(v["power_sums_ok"], true);
    assert_eq!(v["power_sums"][29]["exact"], "1860498");
    let v = json(&["pisot", "--c", "plastic"]);
    assert_eq!(v["certified"], true);
    let v = json(&["pisot", "--c", "1.4142135623730951", "--pisot-poly", "1,0,-2"]);
    assert_eq!(v["certified"], false);
    let v = json(&["pisot", "--c-num", "3", "--c-den", "2", "--pisot-poly", "2,-3"]);
    assert_eq!(v["certified"], false);
    let out = gouq(&["pisot", "--c", "2", "--pisot-poly", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn levy_atom_certificate() {
    let v = json(&[
        "levy", "--c", "2", "--p", "0.3", "--q", "0.5", "--r", "0.2", "--nmax", "12", "--mmax", "4096", "--atom", "2",
    ]);
    assert_eq!(v["aggregation_mode"], "exact-rational");
    assert_eq!(v["atom_certificate"]["negative"], true);
    let v = json(&["levy", "--c", "2", "--p", "0.3", "--q", "0.5", "--r", "0.2", "--sym", "--mmax", "20"]);
    assert!(v["E"][1].as_f64().unwrap() < 0.0);
    let out = gouq(&["levy", "--c", "2", "--p", "0.2", "--q", "0.5", "--r", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}
