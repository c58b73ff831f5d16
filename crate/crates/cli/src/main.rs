//! `coopres`: scenario runner and calculators for the cooperative
//! parametric resonance toolkit.
//!
//! Subcommands: `simulate <file>`, `sweep <file> [--workers N]`,
//! `atoms <H|Rb> <dump|simulate>`, `calc <formula> [--param k=v]...`.
//! Output files land in `--out-dir`, `$COOPRES_OUT_DIR`, or the working
//! directory. Exit codes: 0 success, 2 parse error, 3 validation error,
//! 4 runtime failure.

// validations use `!(x > 0.0)` so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod output;
mod scenario;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;

use coopres_core::constants::{HBAR, MU_BOHR};
use coopres_core::multilevel::{self, build_mu_plus, AtomKind};
use coopres_core::numerics::{Solution, StateVector};
use coopres_core::parametric::{self, MathieuSweepConfig, SweepPoint, SweepRunConfig};
use coopres_core::two_level;

use error::CliError;
use output::{Cell, RunManifest, Table};
use scenario::{RunSpec, Scenario};

#[derive(Parser)]
#[command(name = "coopres", version, about = "cooperative parametric resonance toolkit")]
struct Cli {
    /// Output directory (falls back to $COOPRES_OUT_DIR, then the cwd).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its trajectory artifacts.
    Simulate {
        scenario: PathBuf,
        /// Print the validated configuration back in scenario syntax and
        /// exit without running.
        #[arg(long)]
        dump_config: bool,
    },
    /// Run the detuning sweep described by a scenario with a [grid] block.
    Sweep {
        scenario: PathBuf,
        /// Worker threads for the sweep (0 = automatic).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Inspect or integrate the hyperfine atom models.
    Atoms {
        /// H or Rb
        model: String,
        /// dump or simulate
        action: String,
        /// Transverse field amplitude, tesla.
        #[arg(long, default_value_t = 1e-6)]
        b_s: f64,
        /// Drive frequency, rad/s (default: resonant with omega_c).
        #[arg(long)]
        nu: Option<f64>,
        /// Manifold splitting, rad/s (default: 50 Omega_0).
        #[arg(long)]
        omega_c: Option<f64>,
        /// Initial level, e.g. "F=1,M=1" (default: the pumped state).
        #[arg(long)]
        initial: Option<String>,
        /// Run length in resonant Rabi periods.
        #[arg(long, default_value_t = 2.0)]
        periods: f64,
        /// Fixed propagator step, seconds (default: automatic).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Evaluate one of the physical-parameter formulas.
    Calc {
        /// omega_a_rf, omega_a_optical, zeeman, or nmr
        formula: String,
        /// Repeated key=value inputs.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os("COOPRES_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = match cli.command {
        Command::Simulate {
            scenario,
            dump_config,
        } => cmd_simulate(&scenario, dump_config, &out_dir),
        Command::Sweep { scenario, workers } => cmd_sweep(&scenario, workers, &out_dir),
        Command::Atoms {
            model,
            action,
            b_s,
            nu,
            omega_c,
            initial,
            periods,
            dt,
        } => cmd_atoms(
            &model,
            &action,
            b_s,
            nu,
            omega_c,
            initial.as_deref(),
            periods,
            dt,
            &out_dir,
        ),
        Command::Calc { formula, params } => cmd_calc(&formula, &params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_scenario(path: &Path) -> Result<(Scenario, Vec<u8>), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Parse {
        line: 0,
        col: 0,
        msg: format!("not valid UTF-8: {e}"),
    })?;
    let raw = scenario::parse(&text)?;
    let sc = scenario::validate(&raw)?;
    Ok((sc, bytes))
}

fn level_tag(level: &coopres_core::multilevel::Level) -> String {
    format!("F{}_M{}", level.f, level.m)
}

fn two_level_table(sol: &Solution) -> Table {
    let mut table = Table::new(
        [
            "t",
            "rho_aa",
            "re_rho_ab",
            "im_rho_ab",
            "re_omega_s",
            "im_omega_s",
            "abs_omega_s",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
        let ab = s[two_level::IDX_RHO_AB];
        let om = s[two_level::IDX_OMEGA_S];
        table.push_nums(vec![
            *t,
            s[two_level::IDX_RHO_AA].re,
            ab.re,
            ab.im,
            om.re,
            om.im,
            om.norm(),
        ]);
    }
    table
}

fn atom_table(
    model: &coopres_core::multilevel::AtomModel,
    sol: &Solution,
) -> Table {
    let mut columns = vec!["t".to_string()];
    for level in &model.levels {
        columns.push(format!("re_a_{}", level_tag(level)));
        columns.push(format!("im_a_{}", level_tag(level)));
    }
    columns.push("norm".to_string());
    let mut table = Table::new(columns);
    for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
        let mut row = vec![*t];
        for z in s.values() {
            row.push(z.re);
            row.push(z.im);
        }
        row.push(s.norm());
        table.push_nums(row);
    }
    table
}

fn run_scenario(sc: &Scenario) -> Result<(Solution, Table), CliError> {
    match &sc.run {
        RunSpec::TwoLevel(r) => {
            let sol =
                two_level::simulate(&r.cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
            let table = two_level_table(&sol);
            Ok((sol, table))
        }
        RunSpec::Mathieu(r) => {
            let sol = parametric::simulate_mathieu(
                &r.params,
                &r.drive,
                r.y0,
                (0.0, r.t_end),
                &r.step,
                r.sample_every,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let mut table = Table::new(
                ["t", "omega_s", "omega_s_dot", "abs_omega_s"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
                table.push_nums(vec![*t, s[0].re, s[1].re, s[0].norm()]);
            }
            Ok((sol, table))
        }
        RunSpec::Svea(r) => {
            let sol = parametric::integrate_svea(
                &r.params,
                r.drive_amp,
                r.nu,
                parametric::SveaAmplitudes {
                    a1: r.a0.0,
                    a2: r.a0.1,
                },
                (0.0, r.t_end),
                &r.step,
                r.sample_every,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let mut table = Table::new(
                ["t", "re_a1", "im_a1", "re_a2", "im_a2", "abs_field"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            );
            for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
                let amps = parametric::SveaAmplitudes { a1: s[0], a2: s[1] };
                let field = parametric::reconstruct_field(&amps, r.nu, *t);
                table.push_nums(vec![*t, s[0].re, s[0].im, s[1].re, s[1].im, field.norm()]);
            }
            Ok((sol, table))
        }
        RunSpec::Atom(r) => {
            let model = build_mu_plus(r.kind).with_omega_c(r.omega_c);
            let y0 = model
                .basis_state(r.initial.0, r.initial.1)
                .map_err(|e| CliError::validation("initial.state", e.to_string()))?;
            let sol = multilevel::simulate_atom(
                &model,
                r.drive,
                &y0,
                (0.0, r.t_end),
                r.dt,
                r.sample_every,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let table = atom_table(&model, &sol);
            Ok((sol, table))
        }
        RunSpec::SpinHalf(r) => {
            let y0 = StateVector::new(vec![C64::from(0.0), C64::from(1.0)]);
            let sol = multilevel::simulate_spin_half(
                r.polarization,
                r.b_s,
                r.nu,
                r.omega_c,
                &y0,
                (0.0, r.t_end),
                r.dt,
                r.sample_every,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let mut table = Table::new(
                [
                    "t", "p_up", "p_down", "re_c_up", "im_c_up", "re_c_down", "im_c_down", "norm",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            );
            for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
                table.push_nums(vec![
                    *t,
                    s[0].norm_sqr(),
                    s[1].norm_sqr(),
                    s[0].re,
                    s[0].im,
                    s[1].re,
                    s[1].im,
                    s.norm(),
                ]);
            }
            Ok((sol, table))
        }
    }
}

fn cmd_simulate(path: &Path, dump_config: bool, out_dir: &Path) -> Result<(), CliError> {
    let (sc, bytes) = load_scenario(path)?;
    if dump_config {
        print!("{}", scenario::render(&sc));
        return Ok(());
    }
    if sc.grid.is_some() {
        return Err(CliError::validation(
            "grid",
            "scenario has a [grid] block; run it with 'coopres sweep'",
        ));
    }
    let started = Instant::now();
    let (sol, table) = run_scenario(&sc)?;
    let mut manifest = RunManifest::new(path, &bytes, sc.mode.as_str());
    manifest.integrator = output::IntegratorStats {
        steps: sol.stats.accepted,
        rejections: sol.stats.rejected,
        rhs_evals: sol.stats.rhs_evals,
    };
    if sc.output.wants_csv() {
        output::write_output(
            out_dir,
            &format!("{}.csv", sc.name),
            &table.to_csv(),
            &mut manifest,
        )?;
    }
    if sc.output.wants_json() {
        output::write_output(
            out_dir,
            &format!("{}.json", sc.name),
            &table.to_json(&sc.name, sc.mode.as_str()),
            &mut manifest,
        )?;
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    output::write_manifest(out_dir, &sc.name, &manifest)?;
    println!(
        "{}: {} rows, {} accepted steps ({} rejected), outputs in {}",
        sc.name,
        table.rows.len(),
        sol.stats.accepted,
        sol.stats.rejected,
        out_dir.display()
    );
    Ok(())
}

fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut table = Table::new(
        ["detuning", "max_field", "growth_rate", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for p in points {
        table.push(vec![
            Cell::Num(p.detuning),
            Cell::Num(p.max_field),
            match p.growth_rate {
                Some(g) => Cell::Num(g),
                None => Cell::Text("nan".to_string()),
            },
            Cell::Text(p.status.clone()),
        ]);
    }
    table
}

fn cmd_sweep(path: &Path, workers: usize, out_dir: &Path) -> Result<(), CliError> {
    let (sc, bytes) = load_scenario(path)?;
    let grid = sc
        .grid
        .clone()
        .ok_or_else(|| CliError::validation("grid", "sweep scenarios need a [grid] block"))?;
    let started = Instant::now();

    let run_sweep = || -> Result<Vec<SweepPoint>, CliError> {
        match &sc.run {
            RunSpec::TwoLevel(r) => {
                let omega_a = r.cfg.cooperative_freq;
                let nu_grid: Vec<f64> = grid.iter().map(|d| omega_a * (1.0 - d)).collect();
                let mut step = r.cfg.step;
                step.max_step *= omega_a; // seconds -> tau units
                if let Some(h) = step.fixed_step {
                    step.fixed_step = Some(h * omega_a);
                }
                let run = SweepRunConfig {
                    initial: r.cfg.initial,
                    initial_field: r.cfg.initial_field,
                    t_end: r.cfg.t_span.1 * omega_a,
                    sample_every: r.cfg.sample_every * omega_a,
                    step,
                    sign_convention: r.cfg.sign_convention,
                    fit_window: None,
                };
                Ok(parametric::detuning_sweep(
                    omega_a,
                    r.cfg.drive.omega_0,
                    &nu_grid,
                    &run,
                ))
            }
            RunSpec::Mathieu(r) => {
                let omega_a = r.omega_a;
                let nu_grid: Vec<f64> = grid.iter().map(|d| omega_a * (1.0 - d)).collect();
                let mut step = r.step;
                step.max_step *= omega_a;
                if let Some(h) = step.fixed_step {
                    step.fixed_step = Some(h * omega_a);
                }
                let run = MathieuSweepConfig {
                    y0: r.y0,
                    t_end: r.t_end * omega_a,
                    sample_every: r.sample_every * omega_a,
                    step,
                    fit_window: None,
                };
                Ok(parametric::mathieu_sweep(
                    omega_a,
                    r.drive.omega_0,
                    &nu_grid,
                    &run,
                ))
            }
            _ => Err(CliError::validation(
                "mode",
                format!(
                    "mode '{}' is not sweepable (two_level, mathieu)",
                    sc.mode.as_str()
                ),
            )),
        }
    };

    let points = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))?;
        pool.install(run_sweep)?
    } else {
        run_sweep()?
    };

    let table = sweep_table(&points);
    let mut manifest = RunManifest::new(path, &bytes, sc.mode.as_str());
    if sc.output.wants_csv() {
        output::write_output(
            out_dir,
            &format!("{}.csv", sc.name),
            &table.to_csv(),
            &mut manifest,
        )?;
    }
    if sc.output.wants_json() {
        output::write_output(
            out_dir,
            &format!("{}.json", sc.name),
            &table.to_json(&sc.name, sc.mode.as_str()),
            &mut manifest,
        )?;
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    output::write_manifest(out_dir, &sc.name, &manifest)?;

    let ok = points.iter().filter(|p| p.status == "ok").count();
    println!(
        "{}: {}/{} sweep points ok, outputs in {}",
        sc.name,
        ok,
        points.len(),
        out_dir.display()
    );
    if (ok as f64) < 0.9 * points.len() as f64 {
        return Err(CliError::Runtime(format!(
            "only {ok} of {} sweep points succeeded",
            points.len()
        )));
    }
    Ok(())
}

fn atom_kind(model: &str) -> Result<AtomKind, CliError> {
    match model {
        "H" | "h" => Ok(AtomKind::Hydrogen),
        "Rb" | "rb" | "RB" => Ok(AtomKind::Rubidium87),
        other => Err(CliError::validation(
            "model",
            format!("unknown model '{other}' (H, Rb)"),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_atoms(
    model: &str,
    action: &str,
    b_s: f64,
    nu: Option<f64>,
    omega_c: Option<f64>,
    initial: Option<&str>,
    periods: f64,
    dt: Option<f64>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let kind = atom_kind(model)?;
    match action {
        "dump" => {
            let m = build_mu_plus(kind);
            let levels: Vec<serde_json::Value> = m
                .levels
                .iter()
                .map(|l| {
                    serde_json::json!({
                        "label": l.label(),
                        "energy_offset_factor": l.energy_offset_factor,
                    })
                })
                .collect();
            let mut elements = Vec::new();
            for (i, row) in m.mu_plus.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    if !s.is_zero() {
                        elements.push(serde_json::json!({
                            "to": m.levels[i].label(),
                            "from": m.levels[j].label(),
                            "value": s.to_string(),
                        }));
                    }
                }
            }
            let decomposition: Vec<serde_json::Value> = m
                .levels
                .iter()
                .zip(&m.basis_decomposition)
                .map(|(l, comps)| {
                    serde_json::json!({
                        "level": l.label(),
                        "components": comps.iter().map(|c| serde_json::json!({
                            "ms": c.ms.to_string(),
                            "mi": c.mi.to_string(),
                            "coeff": c.coeff.to_string(),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "model": kind.name(),
                "nuclear_spin": kind.nuclear_spin().to_string(),
                "mu_plus_units": "mu_S = g_s mu_B",
                "levels": levels,
                "mu_plus": elements,
                "decomposition": decomposition,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }
        "simulate" => {
            let omega_0 = MU_BOHR * b_s / HBAR;
            let omega_c = omega_c.unwrap_or(50.0 * omega_0);
            let nu = nu.unwrap_or(omega_c);
            if omega_0 <= 0.0 && nu <= 0.0 && omega_c <= 0.0 {
                return Err(CliError::validation(
                    "b_s",
                    "all of b_s, nu, omega_c are zero; nothing sets a timescale",
                ));
            }
            let modelb = build_mu_plus(kind).with_omega_c(omega_c);
            let initial = match initial {
                None => scenario::pumped_state(kind),
                Some(label) => scenario::parse_level_label(label).ok_or_else(|| {
                    CliError::validation("initial", format!("cannot parse level '{label}'"))
                })?,
            };
            let y0 = modelb
                .basis_state(initial.0, initial.1)
                .map_err(|e| CliError::validation("initial", e.to_string()))?;
            // zero drive has no Rabi period; fall back to the fastest phase
            let period_basis = if omega_0 > 0.0 {
                scenario::rabi_period(kind, omega_0)
            } else {
                std::f64::consts::TAU / nu.max(omega_c).max(f64::MIN_POSITIVE)
            };
            let t_end = periods * period_basis;
            let started = Instant::now();
            let sol = multilevel::simulate_atom(
                &modelb,
                multilevel::AtomDrive { b_s, nu },
                &y0,
                (0.0, t_end),
                dt,
                t_end / 2000.0,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let table = atom_table(&modelb, &sol);
            let name = format!("{}_sim", kind.name().to_lowercase());
            let args = format!(
                "atoms {model} simulate --b-s {b_s:e} --nu {nu:e} --omega-c {omega_c:e} --periods {periods:e}"
            );
            let mut manifest =
                RunManifest::new(Path::new("(cli-args)"), args.as_bytes(), "atom_simulate");
            manifest.integrator = output::IntegratorStats {
                steps: sol.stats.accepted,
                rejections: sol.stats.rejected,
                rhs_evals: sol.stats.rhs_evals,
            };
            output::write_output(out_dir, &format!("{name}.csv"), &table.to_csv(), &mut manifest)?;
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            output::write_manifest(out_dir, &name, &manifest)?;
            println!(
                "{}: {} rows, outputs in {}",
                name,
                table.rows.len(),
                out_dir.display()
            );
            Ok(())
        }
        other => Err(CliError::validation(
            "action",
            format!("unknown action '{other}' (dump, simulate)"),
        )),
    }
}

struct CalcParams {
    map: BTreeMap<String, f64>,
    formula: String,
}

impl CalcParams {
    fn parse(formula: &str, params: &[String]) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for p in params {
            let (k, v) = p.split_once('=').ok_or_else(|| {
                CliError::validation("param", format!("expected key=value, got '{p}'"))
            })?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::validation(k.trim(), format!("not a number: '{v}'")))?;
            map.insert(k.trim().to_string(), value);
        }
        Ok(Self {
            map,
            formula: formula.to_string(),
        })
    }

    fn require(&self, key: &str) -> Result<f64, CliError> {
        self.map.get(key).copied().ok_or_else(|| {
            CliError::validation(
                key,
                format!("missing required parameter for '{}'", self.formula),
            )
        })
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.map.get(key).copied()
    }

    fn inputs_json(&self) -> serde_json::Value {
        serde_json::json!(self.map)
    }
}

fn cmd_calc(formula: &str, params: &[String]) -> Result<(), CliError> {
    use coopres_core::circuit::{
        cooperative_frequency_optical, cooperative_frequency_rf, nmr_estimate, rf_chain_audit,
        CoilSpec, SampleSpec,
    };
    let p = CalcParams::parse(formula, params)?;
    let doc = match formula {
        "zeeman" => {
            let b_z = p.require("b_z")?;
            let g = p.get("g").unwrap_or(coopres_core::constants::G_S);
            let value = multilevel::zeeman_frequency_with_g(b_z, g);
            serde_json::json!({
                "formula": "omega_c = g * mu_B * B_z / hbar",
                "inputs": p.inputs_json(),
                "value": value,
                "units": "rad/s",
                "frequency_hz": value / std::f64::consts::TAU,
            })
        }
        "omega_a_rf" => {
            let reference = CoilSpec::reference();
            let radius = p.get("a_s").unwrap_or(reference.radius);
            let turns = p.get("turns").unwrap_or(1.0) as u32;
            let inductance = p.get("l_s").unwrap_or_else(|| {
                // circular-loop formula with 0.5 mm wire radius
                coopres_core::constants::MU_0 * radius * ((8.0 * radius / 5e-4).ln() - 2.0)
            });
            let omega_ab = p.get("omega_ab").unwrap_or(2.0e9);
            let coil = CoilSpec::new(radius, inductance, 1.0, turns).tuned_to(omega_ab);
            let density = p.get("density").unwrap_or(1.0e19);
            let volume = p
                .get("volume")
                .unwrap_or(4.0 / 3.0 * std::f64::consts::PI * radius.powi(3));
            let mu_ab = p.get("mu_ab").unwrap_or(MU_BOHR);
            let sample = SampleSpec {
                density,
                volume,
                mu_ab,
                omega_ab,
            };
            coil.validate()
                .map_err(|e| CliError::validation("a_s", e.to_string()))?;
            sample
                .validate()
                .map_err(|e| CliError::validation("density", e.to_string()))?;
            let value = cooperative_frequency_rf(&coil, &sample);
            let gamma_0 = p.get("gamma_0").unwrap_or(3.0e3);
            serde_json::json!({
                "formula": "Omega_a^2 = omega_s mu_0^2 mu_ab^2 turns^2 N_spins / (8 hbar L_s a_s^2)",
                "inputs": p.inputs_json(),
                "coil": coil,
                "sample": sample,
                "value": value,
                "units": "rad/s",
                "gamma_0": gamma_0,
                "omega_a_over_gamma_0": value / gamma_0,
                "audit": rf_chain_audit(&coil, &sample),
            })
        }
        "omega_a_optical" => {
            let omega_ab = p.require("omega_ab")?;
            let dipole = p.require("dipole")?;
            let density = p.require("density")?;
            let value = cooperative_frequency_optical(omega_ab, dipole, density);
            serde_json::json!({
                "formula": "Omega_a^2 = (2 pi / hbar) omega_ab dipole^2 N  [Gaussian units]",
                "inputs": p.inputs_json(),
                "unit_system": "Gaussian (dipole in statC*cm, density in 1/cm^3)",
                "value": value,
                "units": "rad/s",
            })
        }
        "nmr" => {
            let n0 = p.require("n0")?;
            let temperature = p.require("temperature")?;
            let delta_e = match (p.get("delta_e"), p.get("omega")) {
                (Some(e), None) => e,
                (None, Some(w)) => HBAR * w,
                (None, None) => {
                    return Err(CliError::validation(
                        "delta_e",
                        "missing required parameter for 'nmr' (delta_e in J, or omega in rad/s)",
                    ))
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::validation(
                        "delta_e",
                        "give either delta_e or omega, not both",
                    ))
                }
            };
            // proton magnetic moment by default
            let mu_ab = p.get("mu_ab").unwrap_or(1.410_606_797_36e-26);
            let coil = CoilSpec::reference();
            let est = nmr_estimate(n0, delta_e, temperature, &coil, mu_ab)
                .map_err(|e| CliError::validation("temperature", e.to_string()))?;
            serde_json::json!({
                "formula": "Delta_N_ab = N_0 Delta_E / (k_B T); Omega_a from the RF chain on the polarized fraction",
                "inputs": p.inputs_json(),
                "delta_n_ab": est.delta_n_ab,
                "delta_n_ab_units": "1/m^3",
                "value": est.omega_a_hint,
                "units": "rad/s",
                "linearization_ok": est.linearization_ok,
            })
        }
        other => {
            return Err(CliError::validation(
                "formula",
                format!("unknown formula '{other}' (omega_a_rf, omega_a_optical, zeeman, nmr)"),
            ))
        }
    };
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}
