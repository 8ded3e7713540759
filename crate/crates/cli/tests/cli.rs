use std::path::Path;
use std::process::Command as Process;

use subcav_cli::config::{BcMode, BedShape};
use subcav_cli::{dispatch, CliError, Command, ConfigFile};
use subcav_core::contact::BoundaryCondition;

const MINIMAL: &str = r#"
[bed]
r = 0.01

[rheology]
n = 1

[bc]
mode = "dirichlet"
u_i = 1.0
N = 0.3
"#;

fn flat(extra: &str) -> String {
    format!(
        r#"
[bed]
shape = "flat"

[rheology]
n = 1

[mesh]
n_e = 8

[bc]
mode = "dirichlet"
u_i = 1.0
N = 0.3
{extra}
"#
    )
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_subcav"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn minimal_file_gets_defaults() {
    let c = ConfigFile::parse(MINIMAL).unwrap();
    let s = c.primary();
    assert_eq!(s.height, 1.0);
    assert_eq!(s.rheology.rate_factor, 0.5);
    assert_eq!(s.dt, 0.01);
    assert_eq!(s.steady_threshold, 1e-4);
    assert_eq!(s.solver.c, 1.0);
    assert_eq!(s.bc, BoundaryCondition::Dirichlet { u_i: 1.0 });
    assert_eq!(s.effective_pressure, 0.3);
    assert_eq!(c.bed.shape, BedShape::Sinusoid);
}

#[test]
fn table1_file_echoes_setup() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table1.toml");
    let c = ConfigFile::load(&path).unwrap();
    assert_eq!(c.mesh.n_e.to_vec(), vec![16, 32, 64]);
    let s = c.scenario(64);
    assert_eq!(s.bed.amplitude(), 0.01);
    assert_eq!((s.rheology.exponent, s.rheology.rate_factor), (1.0, 0.5));
    assert_eq!(s.effective_pressure, 0.3);
    assert_eq!(s.bc, BoundaryCondition::Dirichlet { u_i: 1.0 });
    assert_eq!(*c.bc.mode.get_ref(), BcMode::Dirichlet);
}

#[test]
fn bad_mode_names_its_line() {
    let text = MINIMAL.replace("\"dirichlet\"", "\"both\"");
    let e = ConfigFile::parse(&text).unwrap_err().0;
    assert!(e.contains("line 9"), "{e}");
    assert!(e.contains("both"), "{e}");
}

#[test]
fn unknown_key_names_its_line() {
    let text = MINIMAL.replace("n = 1", "n = 1\nexponent = 3");
    let e = ConfigFile::parse(&text).unwrap_err().0;
    assert!(e.contains("line 7"), "{e}");
    assert!(e.contains("exponent"), "{e}");
}

#[test]
fn type_error_names_its_line() {
    let text = MINIMAL.replace("u_i = 1.0", "u_i = \"fast\"");
    let e = ConfigFile::parse(&text).unwrap_err().0;
    assert!(e.contains("line 10"), "{e}");
}

#[test]
fn missing_keys_are_reported() {
    let e = ConfigFile::parse(&MINIMAL.replace("N = 0.3", "")).unwrap_err().0;
    assert!(e.contains("`N`"), "{e}");
    let e = ConfigFile::parse(&MINIMAL.replace("u_i = 1.0", "")).unwrap_err().0;
    assert!(e.contains("line 9") && e.contains("u_i"), "{e}");
    let e = ConfigFile::parse(&MINIMAL.replace("r = 0.01", "")).unwrap_err().0;
    assert!(e.contains("requires r"), "{e}");
}

#[test]
fn invalid_values_are_rejected() {
    let e = ConfigFile::parse(&format!("{MINIMAL}\n[time]\ndt = -1.0\n")).unwrap_err().0;
    assert!(e.contains("time step"), "{e}");
}

#[test]
fn flat_bed_steady_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &flat(""));
    let out = dir.path().join("out");
    let status = bin()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_csv(&out.join("steady.csv"));
    assert_eq!(rows[0], ["n_e", "cells", "tau_b", "u_b", "x_detach", "x_reattach"]);
    let tau: f64 = rows[1][2].parse().unwrap();
    let ub: f64 = rows[1][3].parse().unwrap();
    assert!(tau.abs() < 1e-10, "tau_b = {tau}");
    assert!((ub - 1.0).abs() < 1e-10, "u_b = {ub}");
    assert_eq!(rows[1][4], "");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["success"], true);
    let files = manifest["outputs"].as_array().unwrap();
    assert!(files.len() >= 4);
    for f in files {
        let meta = std::fs::metadata(out.join(f.as_str().unwrap())).unwrap();
        assert!(meta.len() > 0);
    }
    assert_eq!(manifest["config"]["bc"]["N"], 0.3);
}

#[test]
fn table1_coarse_steady_row() {
    let c = ConfigFile::parse(&MINIMAL.replace("[bc]", "[time]\ndt = 0.03125\n\n[bc]")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = dispatch(Command::Steady, &c, dir.path(), 1).unwrap();
    assert!(m.success);
    let rows = read_csv(&dir.path().join("steady.csv"));
    let v: Vec<f64> = rows[1][2..].iter().map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 0.014772).abs() < 0.05 * 0.014772, "tau_b = {}", v[0]);
    assert!((v[1] - 0.98667).abs() < 0.005 * 0.98667, "u_b = {}", v[1]);
    // cavity from the crest to about three quarters of the period
    assert!(v[2] < 1.0 / 16.0 || v[2] > 1.0 - 1.0 / 16.0);
    assert!((v[3] - 0.75).abs() <= 1.0 / 16.0 + 1e-12);
}

#[test]
fn runs_are_byte_identical() {
    let c = ConfigFile::parse(&MINIMAL.replace("[bc]", "[mesh]\nn_e = 8\n\n[time]\ndt = 0.0625\n\n[bc]")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = dispatch(Command::Steady, &c, a.path(), 1).unwrap();
    dispatch(Command::Steady, &c, b.path(), 1).unwrap();
    for f in &ma.outputs {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn nonconvergence_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("[bc]", "[mesh]\nn_e = 8\n\n[time]\ndt = 0.0625\nt_end = 0.2\n\n[bc]");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let status = bin()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(out.join("steady.csv.partial").exists());
    assert!(out.join("series_ne8.csv.partial").exists());
    assert!(out.join("manifest.json.partial").exists());
    assert!(!out.join("steady.csv").exists());
    let rows = read_csv(&out.join("series_ne8.csv.partial"));
    assert!(rows.len() > 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[bed]\nr = 0.01\n");
    let status = bin()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin().args(["wander", "--config", "x"]).status().unwrap();
    assert!(!status.success());

    let e = CliError::Run(subcav_core::Error::Geometry("inverted cell".into()));
    assert_eq!(e.exit_code(), 4);
}

#[test]
fn sweep_chains_in_parallel() {
    let c = ConfigFile::parse(&flat("[sweep]\nN = [0.5, 1.0]\nexponents = [1, 3]\n")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = dispatch(Command::Sweep, &c, dir.path(), 2).unwrap();
    assert_eq!(m.outputs, ["sweep_n1.csv", "sweep_n3.csv"]);
    let rows = read_csv(&dir.path().join("sweep_n3.csv"));
    assert_eq!(rows.len(), 3);
    // descending N
    assert!(rows[1][0].parse::<f64>().unwrap() > rows[2][0].parse::<f64>().unwrap());
}

#[test]
fn missing_driver_section_is_a_config_error() {
    let c = ConfigFile::parse(&flat("")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let e = dispatch(Command::Unsteady, &c, dir.path(), 1).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unsteady_coarse_run() {
    let text = MINIMAL.replace(
        "[bc]",
        "[mesh]\nn_e = 8\n\n[time]\ndt = 0.0625\nsnapshot_every = 2\n\n[unsteady]\namplitude = 0.1\nfrequency = 0.4\nt_end = 0.5\n\n[bc]",
    );
    let c = ConfigFile::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = dispatch(Command::Unsteady, &c, dir.path(), 1).unwrap();
    assert_eq!(m.outputs, ["series.csv", "roof.csv"]);
    let rows = read_csv(&dir.path().join("series.csv"));
    assert_eq!(rows[0], ["t", "N", "tau_b", "u_b", "V", "x_detach", "x_reattach"]);
    assert_eq!(rows.len(), 1 + 9);
    let tau: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(tau.iter().all(|t| (t - tau[0]).abs() < 1e-8));
}
