use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pdc-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn labeled(text: &str, label: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(label).map(|rest| rest.split_whitespace().next().unwrap().to_string()))
        .unwrap_or_else(|| panic!("no `{label}` in {text}"))
        .parse()
        .unwrap()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Self { header, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

const DEFAULTS: &str = "chi_eff = 6.0e-12
sigma_p = 0.4e-3
sigma_1 = 0.4e-3
mu_p = 1.82
mu_s = 1.78
mu_i = 1.78
crystal_length = 3.0e-3
lambda_p = 404.0e-9
pump_power = 0.1
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn eta_defaults_print_a_labeled_record() {
    let out = run(&["eta"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for label in ["eta", "n_p", "t", "theta", "strength"] {
        assert!(labeled(&text, label).is_finite());
    }
    let n_p = labeled(&text, "n_p");
    assert!((n_p / 3.7e6 - 1.0).abs() < 0.1, "{n_p}");
    let t = labeled(&text, "t ");
    assert_eq!(t.log10().round(), -11.0);
}

#[test]
fn doubling_the_crystal_scales_eta_by_inverse_root_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = write(dir.path(), "base.toml", DEFAULTS);
    let long = write(
        dir.path(),
        "long.toml",
        &DEFAULTS.replace("crystal_length = 3.0e-3", "crystal_length = 6.0e-3"),
    );
    let eta = |path: &str| {
        let out = run(&["eta", "--config", path, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        v["eta"].as_f64().unwrap()
    };
    let ratio = eta(&long) / eta(&base);
    assert!((ratio - 0.5f64.sqrt()).abs() < 1e-6, "{ratio}");
}

#[test]
fn missing_parameter_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.toml", &DEFAULTS.replace("lambda_p = 404.0e-9\n", ""));
    let out = run(&["eta", "--config", &flat]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lambda_p"), "{}", stderr(&out));

    let nested = format!("process = \"multimode\"\n[physical]\n{}", DEFAULTS.replace("lambda_p = 404.0e-9\n", ""));
    let nested = write(dir.path(), "nested.toml", &nested);
    let out = run(&["eta", "--config", &nested]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lambda_p"), "{}", stderr(&out));
}

#[test]
fn nonpositive_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &DEFAULTS.replace("mu_p = 1.82", "mu_p = -1.0"));
    let out = run(&["eta", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mu_p"));
}

#[test]
fn simulate_coherent_pump_gives_thermal_signal() {
    let out = run(&[
        "simulate", "--process", "multimode", "--n", "2", "--pump", "coherent", "--alpha",
        "1.4142135623730951", "--theta", "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let g = v["exact_g2"].as_f64().unwrap();
    assert!((g / 2.0 - 1.0).abs() < 0.005, "{g}");
    assert!(v["distribution"].is_array());
    assert!(v["series_g2"].as_f64().is_some());
    assert!((v["weak_g2"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(v["regime"]["strength"].as_f64().unwrap() < 1e-5);
}

#[test]
fn simulate_single_mode_fock_distribution() {
    let out = run(&[
        "simulate", "--process", "singlemode", "--pump", "fock", "--m", "1", "--theta", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let p: Vec<f64> = v["distribution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((p[2] - (2f64.sqrt() * 0.2).sin().powi(2)).abs() < 1e-14);
    assert_eq!(p[1], 0.0);
}

#[test]
fn simulate_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "process = \"multimode\"\nn = 3\ntheta = 0.05\n[pump]\nkind = \"thermal\"\nnbar = 0.7\n",
    );
    let once = || {
        let out = run(&["simulate", "--config", &config]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        out.stdout
    };
    let a = once();
    assert!(!a.is_empty());
    assert_eq!(a, once());

    let target = dir.path().join("run.json");
    let out = run(&["simulate", "--config", &config, "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    let printed: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(written["distribution"], printed["distribution"]);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "process = \"multimode\"\ntheta = 0.001\n[pump]\nkind = \"fock\"\nm = 2\n[output]\nformat = \"json\"\n",
    );
    let out = run(&["simulate", "--config", &config]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["exact_g2"].as_f64().unwrap() - 1.0).abs() < 0.01);

    let out = run(&["simulate", "--config", &config, "--pump", "thermal", "--nbar", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = Csv::parse(&stdout(&out));
    let g = csv.column("exact_g2")[0];
    assert!((g / 4.0 - 1.0).abs() < 0.01, "{g}");
}

#[test]
fn theta_and_physical_block_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let both = format!(
        "process = \"multimode\"\ntheta = 0.1\n[pump]\nkind = \"fock\"\nm = 1\n[physical]\n{DEFAULTS}"
    );
    let both = write(dir.path(), "both.toml", &both);
    let out = run(&["simulate", "--config", &both]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("theta"));

    let none = write(dir.path(), "none.toml", "process = \"multimode\"\n[pump]\nkind = \"fock\"\nm = 1\n");
    let out = run(&["simulate", "--config", &none]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn physical_block_supplies_theta() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("process = \"multimode\"\n[pump]\nkind = \"fock\"\nm = 2\n[physical]\n{DEFAULTS}");
    let config = write(dir.path(), "phys.toml", &config);
    let out = run(&["simulate", "--config", &config]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let eta = run(&["eta", "--format", "json"]);
    let e: Value = serde_json::from_str(&stdout(&eta)).unwrap();
    assert_eq!(v["theta"].as_f64().unwrap(), e["theta"].as_f64().unwrap());
}

#[test]
fn bad_flags_and_unknown_keys_exit_two() {
    assert_eq!(run(&["simulate", "--process", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--alpha", "1,2,3"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", "proces = \"multimode\"\n");
    let out = run(&["simulate", "--config", &typo]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("proces"));
    let out = run(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--process", "multimode", "--n", "1", "--pump", "fock", "--m", "1", "--theta", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("never.json");
    // θ = 0 leaves the signal in vacuum, where g2 is undefined
    let out = run(&[
        "simulate", "--process", "multimode", "--pump", "fock", "--m", "2", "--theta", "0",
        "--out", target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!stderr(&out).is_empty());
    assert!(!target.exists());
}

#[test]
fn failed_sweep_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "coherent", "--alpha", "1", "--axis", "theta",
        "--start", "0", "--stop", "0.1", "--count", "5", "--format", "csv", "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!target.exists());
}

#[test]
fn theta_sweep_approaches_two_and_departs_at_large_theta() {
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "coherent", "--alpha", "1", "--axis", "theta",
        "--start", "1e-4", "--stop", "1e-1", "--count", "7", "--scale", "log", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let csv = Csv::parse(&text);
    assert_eq!(
        text.lines().next().unwrap(),
        "axis,value,theta,n_p,strength,exact_g2,series_g2,weak_g2,series_gap,weak_gap"
    );
    let values = csv.column("value");
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    let g = csv.column("exact_g2");
    assert!((g[0] - 2.0).abs() < 1e-6);
    let departure: Vec<f64> = g.iter().map(|x| (x - 2.0).abs()).collect();
    // below ~1e-3 the departure is at round-off level
    assert!(departure[2..].windows(2).all(|w| w[0] < w[1]), "{departure:?}");
}

#[test]
fn n_sweep_weak_column_doubles() {
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "coherent", "--alpha", "1", "--theta", "1e-3",
        "--axis", "n", "--start", "2", "--stop", "4", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = Csv::parse(&stdout(&out));
    let weak = csv.column("weak_g2");
    for (w, target) in weak.iter().zip([2.0, 4.0, 8.0]) {
        assert!((w - target).abs() < 1e-9, "{weak:?}");
    }
    let exact = csv.column("exact_g2");
    for (g, target) in exact.iter().zip([2.0, 4.0, 8.0]) {
        assert!((g / target - 1.0).abs() < 0.01);
    }
}

#[test]
fn n_p_sweep_follows_inverse_law() {
    let out = run(&[
        "sweep", "--process", "singlemode", "--pump", "coherent", "--alpha", "1", "--theta", "5e-3",
        "--axis", "n_p", "--start", "1", "--stop", "8", "--count", "8", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = Csv::parse(&stdout(&out));
    let x: Vec<f64> = csv.column("n_p").iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = csv.column("exact_g2").iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope + 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn sweep_json_matches_csv_rows() {
    let base = [
        "sweep", "--process", "multimode", "--pump", "thermal", "--nbar", "0.5", "--axis", "theta",
        "--start", "0.01", "--stop", "0.05", "--count", "3",
    ];
    let csv = Csv::parse(&stdout(&run(&[&base[..], &["--format", "csv"]].concat())));
    let json: Value = serde_json::from_str(&stdout(&run(&[&base[..], &["--format", "json"]].concat()))).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (row, g) in rows.iter().zip(csv.column("exact_g2")) {
        assert!((row["exact_g2"].as_f64().unwrap() - g).abs() <= 4.0 * f64::EPSILON * g);
        assert_eq!(row["axis"], "theta");
    }
}

#[test]
fn sweep_rejects_bad_ranges() {
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "coherent", "--alpha", "1", "--axis", "theta",
        "--start", "0.1", "--stop", "0.01", "--count", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "coherent", "--alpha", "1", "--axis", "theta",
        "--start", "0.01", "--stop", "0.1", "--count", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "sweep", "--process", "multimode", "--pump", "fock", "--m", "2", "--theta", "0.01",
        "--axis", "n_p", "--start", "1", "--stop", "4", "--count", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let out = run(&["verify"]);
    let text = stdout(&out);
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"))
        .collect();
    assert_eq!(lines.len(), 8, "{text}");
    let all_passed = lines.iter().all(|l| l.starts_with("[PASS]"));
    assert_eq!(out.status.code(), Some(if all_passed { 0 } else { 3 }));
}
