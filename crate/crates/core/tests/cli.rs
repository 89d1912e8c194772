use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LATTICE: &str = "[lattice]\nn_cells = 8\ncell_length = 1.0\npoints_per_cell = 32\nmass = 1.0\n";

const COSINE: &str = "[potential]\nconstant_term = 0.0\nharmonics = [{ h = 1, alpha = 2.0, beta = 0.0 }]\n";

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn bloch_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bloch-lab")).args(args).output().unwrap()
}

fn run_ok(config: &Path, out: &Path, args: &[&str]) {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let output = bloch_lab(&full);
    assert!(
        output.status.success(),
        "{:?}: {}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );
}

fn run_err(config: &Path, out: &Path, args: &[&str]) -> (i32, String) {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let output = bloch_lab(&full);
    (output.status.code().unwrap(), String::from_utf8_lossy(&output.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn free_particle_band_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), LATTICE);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &["solve"]);
    let mut reader = csv::Reader::from_path(out.join("bands.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["band", "l", "k", "energy"]);
    let row = reader
        .records()
        .map(|r| r.unwrap())
        .find(|r| &r[0] == "0" && &r[1] == "1")
        .unwrap();
    let k: f64 = row[2].parse().unwrap();
    let e: f64 = row[3].parse().unwrap();
    assert!((k - std::f64::consts::PI / 4.0).abs() <= 1e-12);
    assert!((e - std::f64::consts::PI.powi(2) / 32.0).abs() <= 1e-10);
    let summary = json(&out.join("summary_solve.json"));
    assert_eq!(summary["config"]["bands"], 4);
    assert_eq!(summary["config"]["lattice"]["mass"], 1.0);
    assert!(summary["checks"]["orthonormality_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn missing_key_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[lattice]\nn_cells = 8\npoints_per_cell = 32\n");
    let (code, stderr) = run_err(&cfg, &tmp.path().join("out"), &["solve"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("cell_length"), "{stderr}");

    let cfg = write_config(tmp.path(), &format!("{LATTICE}bogus = 1\n"));
    let (code, _) = run_err(&cfg, &tmp.path().join("out"), &["solve"]);
    assert_eq!(code, 2);

    let (code, _) = run_err(&tmp.path().join("absent.toml"), &tmp.path().join("out"), &["solve"]);
    assert_ne!(code, 0);
}

#[test]
fn solve_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LATTICE}{COSINE}"));
    let out = tmp.path().join("out");
    let names = ["bands.csv", "states.csv", "summary_solve.json"];
    run_ok(&cfg, &out, &["solve"]);
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    run_ok(&cfg, &out, &["solve"]);
    for (name, bytes) in names.iter().zip(&first) {
        assert!(fs::read(out.join(name)).unwrap() == *bytes, "{name} changed between runs");
    }
}

#[test]
fn scan_summaries() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LATTICE}{COSINE}"));

    let out = tmp.path().join("h");
    run_ok(&cfg, &out, &["scan", "--observable", "hamiltonian"]);
    let s = json(&out.join("summary_scan.json"));
    assert!(s["max_off_sector_modulus"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["theorem_check"]["passed"], true);

    let out = tmp.path().join("o");
    run_ok(&cfg, &out, &["scan", "--observable", "wannier_projector(0, 0)"]);
    let s = json(&out.join("summary_scan.json"));
    let band0 = &s["same_band_off_sector_modulus"][0];
    assert_eq!(band0["band"], 0);
    for key in ["min", "max"] {
        assert!((band0[key].as_f64().unwrap() - 0.125).abs() <= 1e-8);
    }
    assert!(s["same_band_off_sector_modulus"][1]["max"].as_f64().unwrap() <= 1e-10);
    assert!(s["cell_periodicity_defect"].as_f64().unwrap() > 0.01);
    assert!(out.join("scan.csv").exists() && out.join("locality.csv").exists());

    let out = tmp.path().join("m1");
    run_ok(&cfg, &out, &["scan", "--observable", "harmonic(1)"]);
    let s = json(&out.join("summary_scan.json"));
    let support: Vec<i64> = s["delta_l_histogram"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|row| row["nonzero"].as_u64().unwrap() > 0)
        .map(|row| row["delta_l"].as_i64().unwrap())
        .collect();
    assert_eq!(support, vec![-1, 1]);

    let (code, stderr) = run_err(&cfg, &tmp.path().join("x"), &["scan", "--observable", "nonsense"]);
    assert_ne!(code, 0);
    assert!(stderr.contains("nonsense"), "{stderr}");
}

#[test]
fn named_series_observable() {
    let tmp = TempDir::new().unwrap();
    let body = format!(
        "{LATTICE}{COSINE}\n[[observables]]\nname = \"cell_cos\"\nterms = [[8, 0, 1.0, 0.0], [16, 0, 0.5, 0.0]]\n"
    );
    let cfg = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    run_ok(&cfg, &out, &["scan", "--observable", "cell_cos"]);
    let s = json(&out.join("summary_scan.json"));
    assert!(s["cell_periodicity_defect"].as_f64().unwrap() <= 1e-10);
    assert!(s["max_off_sector_modulus"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["config"]["observables"][0]["name"], "cell_cos");
}

#[test]
fn wannier_and_winding_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LATTICE}{COSINE}"));
    let out = tmp.path().join("w");
    run_ok(&cfg, &out, &["wannier", "--band", "0", "--site", "3"]);
    for name in ["wannier.csv", "wannier_cells.csv", "locality.csv", "summary_wannier.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let (code, _) = run_err(&cfg, &tmp.path().join("bad"), &["wannier", "--site", "8"]);
    assert_eq!(code, 2);

    let out = tmp.path().join("wind");
    run_ok(&cfg, &out, &["winding", "--observable", "harmonic(1)", "--band", "0"]);
    assert!(out.join("winding.csv").exists() && out.join("probe.csv").exists());
    let s = json(&out.join("summary_winding.json"));
    assert_eq!(s["command"], "winding");
}

fn dynamics_config(epsilons: &str, perturbation: &str) -> String {
    format!(
        "{LATTICE}{COSINE}\n[dynamics]\nepsilons = {epsilons}\nsource_cell = 2\ntarget_cell = 6\nperturbation = \"{perturbation}\"\n"
    )
}

#[test]
fn propagate_reports_linear_response() {
    let tmp = TempDir::new().unwrap();
    let eps = "[1e-4, 1.4677992676220695e-4, 2.154434690031884e-4, 3.1622776601683794e-4, 4.641588833612779e-4, 6.812920690579613e-4, 1e-3]";
    let cfg = write_config(tmp.path(), &dynamics_config(eps, "wannier_projector(0, 0)"));
    let out = tmp.path().join("p");
    run_ok(&cfg, &out, &["propagate"]);
    let s = json(&out.join("summary_propagate.json"));
    assert!(s["linear_response"]["relative_error"].as_f64().unwrap() <= 0.01);
    assert!((s["second_order_slope"].as_f64().unwrap() - 2.0).abs() <= 0.1);
    assert!(s["max_unitarity_defect"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["kinetic_scheme"], "fd8");
    assert!(out.join("sweep.csv").exists() && out.join("profile.csv").exists());

    let cfg = write_config(tmp.path(), &dynamics_config(eps, "none"));
    let out = tmp.path().join("p0");
    run_ok(&cfg, &out, &["propagate"]);
    let s = json(&out.join("summary_propagate.json"));
    assert_eq!(s["kernel_modulus"].as_f64().unwrap(), 0.0);
    assert!(s["linear_response"]["slope"].as_f64().unwrap().abs() <= 1e-6);
}

#[test]
fn propagate_validation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &dynamics_config("[]", "none"));
    let (code, stderr) = run_err(&cfg, &tmp.path().join("a"), &["propagate"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("epsilons"), "{stderr}");

    let cfg = write_config(tmp.path(), &format!("{LATTICE}{COSINE}"));
    let (code, stderr) = run_err(&cfg, &tmp.path().join("b"), &["propagate"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("dynamics"), "{stderr}");
}

#[test]
fn bad_arguments_are_config_errors() {
    let output = bloch_lab(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
    let output = bloch_lab(&["--help"]);
    assert!(output.status.success());
}

#[test]
fn shipped_reference_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let cfg = bloch_lab::cli::config::RunConfig::load(&path).unwrap();
    assert_eq!(cfg.observables.len(), 2);
    assert!(cfg.dynamics.is_some());
}
