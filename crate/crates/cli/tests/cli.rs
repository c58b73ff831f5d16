//! End-to-end tests of the `coopres` binary: exit codes, output formats,
//! determinism, and the bundled scenarios.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_coopres")
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coopres_test_{}_{}", tag, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("COOPRES_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn fig3a_reaches_the_saturation_band() {
    let dir = fresh_dir("fig3a");
    let out = run(&[
        "simulate",
        scenario_path("fig3a.scenario").to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.join("fig3a.csv"));
    assert_eq!(
        header,
        vec![
            "t",
            "rho_aa",
            "re_rho_ab",
            "im_rho_ab",
            "re_omega_s",
            "im_omega_s",
            "abs_omega_s"
        ]
    );
    let max_field = column(&header, &rows, "abs_omega_s")
        .into_iter()
        .fold(0.0f64, f64::max);
    assert!(
        (0.25..=0.55).contains(&max_field),
        "max |Omega_s|/Omega_a = {max_field}"
    );
}

#[test]
fn zero_drive_fixed_point_is_constant() {
    let dir = fresh_dir("fixed_point");
    let text = "\
name = fixed_point
mode = two_level

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a
omega_0 = 0.0 Omega_a

[initial]
rho_aa = 0.42
rho_ab_re = 0.0
rho_ab_im = 0.0

[run]
t_end = 50 tau
sample_every = 1 tau

[output]
format = both
";
    let path = write_scenario(&dir, "fixed_point.scenario", text);
    let out = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.join("fixed_point.csv"));
    for row in &rows {
        assert_eq!(row[1..], rows[0][1..], "non-constant row {row:?}");
    }
    // format = both also writes the JSON twin with the same columns
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fixed_point.json")).unwrap())
            .unwrap();
    assert_eq!(doc["columns"].as_array().unwrap().len(), 7);
    assert_eq!(doc["rows"].as_array().unwrap().len(), rows.len());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("fixed_point.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_scenario_exits_2_without_outputs() {
    let dir = fresh_dir("malformed");
    let path = write_scenario(&dir, "bad.scenario", "this is not a scenario\n");
    let out = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
    let leftovers: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert!(leftovers.is_empty(), "partial outputs: {leftovers:?}");
}

#[test]
fn validation_error_exits_3_naming_the_field() {
    let dir = fresh_dir("validation");
    let text = "\
name = bad_pop
mode = two_level

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a

[initial]
rho_aa = 1.5

[run]
t_end = 10 tau
";
    let path = write_scenario(&dir, "bad_pop.scenario", text);
    let out = run(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("initial.rho_aa"), "stderr: {stderr}");
}

const SMALL_SWEEPABLE: &str = "\
name = mini
mode = two_level

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a
omega_0 = 0.01 Omega_a

[initial]
rho_aa = 0.1

[run]
t_end = 200 tau
sample_every = 0.25 tau
rel_tol = 1e-9
abs_tol = 1e-11
";

#[test]
fn one_point_sweep_matches_simulate() {
    let dir = fresh_dir("sweep1");
    let sim_path = write_scenario(&dir, "mini.scenario", SMALL_SWEEPABLE);
    let sweep_text = format!(
        "{SMALL_SWEEPABLE}
[grid]
detuning_min = -1e-9
detuning_max = 1e-9
points = 1
"
    )
    .replace("name = mini", "name = mini_sweep");
    let sweep_path = write_scenario(&dir, "mini_sweep.scenario", &sweep_text);

    let out = run(&[
        "simulate",
        sim_path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "sweep",
        sweep_path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (h_sim, rows_sim) = read_csv(&dir.join("mini.csv"));
    let max_field = column(&h_sim, &rows_sim, "abs_omega_s")
        .into_iter()
        .fold(0.0f64, f64::max);
    let (h_sw, rows_sw) = read_csv(&dir.join("mini_sweep.csv"));
    assert_eq!(h_sw, vec!["detuning", "max_field", "growth_rate", "status"]);
    assert_eq!(rows_sw.len(), 1);
    let sweep_max = column(&h_sw, &rows_sw, "max_field")[0];
    assert!(
        (sweep_max - max_field).abs() <= 1e-12 * max_field,
        "{sweep_max} vs {max_field}"
    );
    assert_eq!(rows_sw[0].last().unwrap(), "ok");
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let dir = fresh_dir("workers");
    let text = "\
name = wsweep
mode = mathieu

[grid]
detuning_min = -0.2
detuning_max = 0.2
points = 9

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a
omega_0 = 0.01 Omega_a

[initial]
omega_s = 0.0 Omega_a

[run]
t_end = 200 tau
sample_every = 0.25 tau
";
    let path = write_scenario(&dir, "wsweep.scenario", text);
    let d1 = fresh_dir("workers_1");
    let d8 = fresh_dir("workers_8");
    let out = run(&[
        "sweep",
        path.to_str().unwrap(),
        "--workers",
        "1",
        "--out-dir",
        d1.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "sweep",
        path.to_str().unwrap(),
        "--workers",
        "8",
        "--out-dir",
        d8.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let a = std::fs::read(d1.join("wsweep.csv")).unwrap();
    let b = std::fs::read(d8.join("wsweep.csv")).unwrap();
    assert_eq!(a, b, "worker count changed the sweep bytes");
}

#[test]
fn sweep_with_too_many_failed_points_exits_4() {
    // detunings close to 1 give non-positive drive frequencies: those points
    // fail per-row, and with more than 10% failed the sweep exits 4
    let dir = fresh_dir("sweep_fail");
    let text = "\
name = fsweep
mode = two_level

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a
omega_0 = 0.01 Omega_a

[initial]
rho_aa = 0.1

[run]
t_end = 50 tau
sample_every = 1 tau

[grid]
detuning_min = 0.8
detuning_max = 1.2
points = 5
";
    let path = write_scenario(&dir, "fsweep.scenario", text);
    let out = run(&[
        "sweep",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    // rows are still written, failed points carry their status
    let (header, rows) = read_csv(&dir.join("fsweep.csv"));
    assert_eq!(rows.len(), 5);
    let status_idx = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().any(|r| r[status_idx].starts_with("error")));
    assert!(rows.iter().any(|r| r[status_idx] == "ok"));
}

#[test]
fn atoms_dumps_match_the_tables() {
    let out = run(&["atoms", "Rb", "dump"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let elements = doc["mu_plus"].as_array().unwrap();
    assert_eq!(elements.len(), 12);
    let strong = elements
        .iter()
        .find(|e| e["to"] == "F=2,M=2" && e["from"] == "F=1,M=1")
        .expect("strong element present");
    assert_eq!(strong["value"], "-sqrt(3)/2");

    let out = run(&["atoms", "H", "dump"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["mu_plus"].as_array().unwrap().len(), 4);
    // the worked-example element
    let elem = doc["mu_plus"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["to"] == "F=1,M=1" && e["from"] == "F=1,M=0")
        .expect("H element present");
    assert_eq!(elem["value"], "sqrt(2)/2");

    let out = run(&["atoms", "Xe", "dump"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn atoms_simulate_zero_field_keeps_norm() {
    let dir = fresh_dir("atoms_zero");
    let out = run(&[
        "atoms",
        "H",
        "simulate",
        "--b-s",
        "0",
        "--omega-c",
        "1e6",
        "--periods",
        "3",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.join("h_sim.csv"));
    for v in column(&header, &rows, "norm") {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn calc_zeeman_value() {
    let out = run(&["calc", "zeeman", "--param", "b_z=0.05"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = doc["value"].as_f64().unwrap();
    assert!((value - 8.794e9).abs() / 8.794e9 < 1e-3, "value {value}");
    assert_eq!(doc["units"], "rad/s");
}

#[test]
fn calc_rf_default_hits_target_scale() {
    let out = run(&["calc", "omega_a_rf"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = doc["value"].as_f64().unwrap();
    assert!(value > 1e5 / 3.0 && value < 3e5, "Omega_a {value}");
    assert!(doc["omega_a_over_gamma_0"].as_f64().unwrap() > 10.0);
    // audit trail ends on Omega_a in rad/s
    let audit = doc["audit"].as_array().unwrap();
    assert_eq!(audit.last().unwrap()["quantity"], "omega_a");
    assert_eq!(audit.last().unwrap()["unit"], "rad/s");
}

#[test]
fn calc_nmr_cases() {
    let out = run(&[
        "calc",
        "nmr",
        "--param",
        "n0=1e29",
        "--param",
        "delta_e=0",
        "--param",
        "temperature=300",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["delta_n_ab"].as_f64().unwrap(), 0.0);

    // missing parameter names the field and exits 3
    let out = run(&["calc", "nmr", "--param", "temperature=300"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n0"));
}

#[test]
fn manifest_digests_match_files() {
    use sha2::{Digest, Sha256};
    let dir = fresh_dir("manifest");
    let path = write_scenario(&dir, "mini.scenario", SMALL_SWEEPABLE);
    let out = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("mini.manifest.json")).unwrap())
            .unwrap();
    for entry in manifest["outputs"].as_array().unwrap() {
        let rel = entry["path"].as_str().unwrap();
        let bytes = std::fs::read(dir.join(rel)).unwrap();
        let digest = format!("{:x}", Sha256::digest(&bytes));
        assert_eq!(entry["sha256"].as_str().unwrap(), digest, "digest of {rel}");
    }
    assert!(manifest["integrator"]["steps"].as_u64().unwrap() > 0);
}

#[test]
fn fixed_step_runs_are_byte_identical() {
    let dir = fresh_dir("determinism");
    let text = "\
name = det
mode = two_level

[physics]
omega_a = 1.0 rad/s
nu = 1.0 Omega_a
omega_0 = 0.01 Omega_a

[initial]
rho_aa = 0.1

[run]
t_end = 100 tau
sample_every = 0.5 tau
fixed_step = 0.005 tau
";
    let path = write_scenario(&dir, "det.scenario", text);
    let d1 = fresh_dir("determinism_1");
    let d2 = fresh_dir("determinism_2");
    for d in [&d1, &d2] {
        let out = run(&[
            "simulate",
            path.to_str().unwrap(),
            "--out-dir",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(d1.join("det.csv")).unwrap();
    let b = std::fs::read(d2.join("det.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dump_config_is_idempotent() {
    let dir = fresh_dir("dump");
    let out = run(&[
        "simulate",
        scenario_path("fig3a.scenario").to_str().unwrap(),
        "--dump-config",
    ]);
    assert!(out.status.success());
    let dumped = String::from_utf8(out.stdout).unwrap();
    let path = write_scenario(&dir, "dumped.scenario", &dumped);
    let out2 = run(&["simulate", path.to_str().unwrap(), "--dump-config"]);
    assert!(out2.status.success(), "{}", String::from_utf8_lossy(&out2.stderr));
    assert_eq!(dumped, String::from_utf8(out2.stdout).unwrap());
}

#[test]
fn bundled_scenarios_all_validate() {
    for name in [
        "fig3a.scenario",
        "fig3b.scenario",
        "fig3c.scenario",
        "mathieu_demo.scenario",
        "h_atom_rabi.scenario",
        "rb_pumped.scenario",
    ] {
        let out = run(&[
            "simulate",
            scenario_path(name).to_str().unwrap(),
            "--dump-config",
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
