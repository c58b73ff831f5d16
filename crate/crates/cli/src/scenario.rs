//! Scenario files: a line-based `key = value` format with `[sections]`,
//! comments, and explicit units on physical quantities.
//!
//! Every physical quantity must carry a unit suffix (`nu = 1.0 Omega_a`,
//! `b_z = 500 G`, `t_end = 5000 tau`); unit conversion happens here at the
//! boundary and the rest of the program works in SI / cooperative units.

use std::collections::BTreeMap;

use coopres_core::multilevel::{AtomDrive, AtomKind, HalfInt, Polarization};
use coopres_core::numerics::StepControl;
use coopres_core::parametric::{self, ParametricParams};
use coopres_core::two_level::{DriveSpec, FieldState, SimConfig, SignConvention, TwoLevelState};
use num_complex::Complex64 as C64;

use crate::error::CliError;

#[derive(Clone, Debug)]
pub struct RawValue {
    pub text: String,
}

#[derive(Clone, Debug, Default)]
pub struct RawScenario {
    /// section -> key -> value; top-level keys live in section "".
    pub sections: BTreeMap<String, BTreeMap<String, RawValue>>,
}

/// Parse the raw key/value structure; all errors carry line and column.
pub fn parse(text: &str) -> Result<RawScenario, CliError> {
    let mut raw = RawScenario::default();
    let mut current = String::new();
    raw.sections.entry(current.clone()).or_default();
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match full_line.find('#') {
            Some(p) => &full_line[..p],
            None => full_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(CliError::Parse {
                line: line_no,
                col: line.find('[').unwrap_or(0) + 1,
                msg: "section header missing closing ']'".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(CliError::Parse {
                    line: line_no,
                    col: 1,
                    msg: "empty section name".into(),
                });
            }
            current = name.to_string();
            raw.sections.entry(current.clone()).or_default();
            continue;
        }
        let eq = trimmed.find('=').ok_or(CliError::Parse {
            line: line_no,
            col: 1,
            msg: format!("expected 'key = value', got '{trimmed}'"),
        })?;
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        if key.is_empty() {
            return Err(CliError::Parse {
                line: line_no,
                col: 1,
                msg: "empty key before '='".into(),
            });
        }
        if value.is_empty() {
            return Err(CliError::Parse {
                line: line_no,
                col: eq + 2,
                msg: format!("empty value for key '{key}'"),
            });
        }
        let section = raw.sections.get_mut(&current).unwrap();
        if section
            .insert(
                key.to_string(),
                RawValue {
                    text: value.to_string(),
                },
            )
            .is_some()
        {
            return Err(CliError::Parse {
                line: line_no,
                col: 1,
                msg: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(raw)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    TwoLevel,
    Mathieu,
    Svea,
    AtomH,
    AtomRb,
    SpinHalf,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TwoLevel => "two_level",
            Mode::Mathieu => "mathieu",
            Mode::Svea => "svea",
            Mode::AtomH => "atom_h",
            Mode::AtomRb => "atom_rb",
            Mode::SpinHalf => "spin_half",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// Fully validated scenario ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub output: OutputFormat,
    pub run: RunSpec,
    pub grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub enum RunSpec {
    TwoLevel(TwoLevelRun),
    Mathieu(MathieuRun),
    Svea(SveaRun),
    Atom(AtomRun),
    SpinHalf(SpinHalfRun),
}

#[derive(Clone, Debug)]
pub struct TwoLevelRun {
    pub cfg: SimConfig,
}

#[derive(Clone, Debug)]
pub struct MathieuRun {
    pub omega_a: f64,
    pub params: ParametricParams,
    pub drive: DriveSpec,
    pub y0: (f64, f64),
    pub t_end: f64,
    pub sample_every: f64,
    pub step: StepControl,
}

#[derive(Clone, Debug)]
pub struct SveaRun {
    pub params: ParametricParams,
    pub drive_amp: f64,
    pub nu: f64,
    pub a0: (C64, C64),
    pub t_end: f64,
    pub sample_every: f64,
    pub step: StepControl,
}

#[derive(Clone, Debug)]
pub struct AtomRun {
    pub kind: AtomKind,
    pub omega_c: f64,
    pub drive: AtomDrive,
    pub initial: (HalfInt, HalfInt),
    pub t_end: f64,
    pub dt: Option<f64>,
    pub sample_every: f64,
}

#[derive(Clone, Debug)]
pub struct SpinHalfRun {
    pub polarization: Polarization,
    pub b_s: f64,
    pub nu: f64,
    pub omega_c: f64,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub sample_every: f64,
}

// small helper over one section
struct Fields<'a> {
    section: &'a str,
    map: Option<&'a BTreeMap<String, RawValue>>,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Fields<'a> {
    fn new(raw: &'a RawScenario, section: &'a str) -> Self {
        Self {
            section,
            map: raw.sections.get(section),
            used: std::cell::RefCell::new(Vec::new()),
        }
    }

    fn qualify(&self, key: &str) -> String {
        if self.section.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.section, key)
        }
    }

    fn raw(&self, key: &str) -> Option<&'a RawValue> {
        self.used.borrow_mut().push(key.to_string());
        self.map.and_then(|m| m.get(key))
    }

    fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(|v| v.text.clone())
    }

    fn require_string(&self, key: &str) -> Result<String, CliError> {
        self.string(key)
            .ok_or_else(|| CliError::validation(self.qualify(key), "missing required field"))
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let tok = v.text.split_whitespace().collect::<Vec<_>>();
                if tok.len() != 1 {
                    return Err(CliError::validation(
                        self.qualify(key),
                        format!("expected a bare number, got '{}'", v.text),
                    ));
                }
                tok[0]
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| {
                        CliError::validation(
                            self.qualify(key),
                            format!("not a number: '{}'", tok[0]),
                        )
                    })
            }
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    /// Quantity with a required unit from `units`: returns the value
    /// converted by the matched unit's factor closure.
    fn quantity(
        &self,
        key: &str,
        units: &[(&str, f64)],
    ) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let tok = v.text.split_whitespace().collect::<Vec<_>>();
                if tok.len() != 2 {
                    let allowed = units
                        .iter()
                        .map(|(u, _)| *u)
                        .collect::<Vec<_>>()
                        .join(", ");
                    return Err(CliError::validation(
                        self.qualify(key),
                        format!(
                            "expected '<number> <unit>' with unit in {{{allowed}}}, got '{}'",
                            v.text
                        ),
                    ));
                }
                let num: f64 = tok[0].parse().map_err(|_| {
                    CliError::validation(self.qualify(key), format!("not a number: '{}'", tok[0]))
                })?;
                for (unit, factor) in units {
                    if tok[1] == *unit {
                        return Ok(Some(num * factor));
                    }
                }
                let allowed = units
                    .iter()
                    .map(|(u, _)| *u)
                    .collect::<Vec<_>>()
                    .join(", ");
                Err(CliError::validation(
                    self.qualify(key),
                    format!("unknown unit '{}', expected one of {{{allowed}}}", tok[1]),
                ))
            }
        }
    }

    fn require_quantity(&self, key: &str, units: &[(&str, f64)]) -> Result<f64, CliError> {
        self.quantity(key, units)?
            .ok_or_else(|| CliError::validation(self.qualify(key), "missing required field"))
    }

    fn check_unknown(&self) -> Result<(), CliError> {
        if let Some(map) = self.map {
            let used = self.used.borrow();
            for key in map.keys() {
                if !used.iter().any(|u| u == key) {
                    return Err(CliError::validation(
                        self.qualify(key),
                        "unknown field".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn frequency_units(omega_a: f64) -> Vec<(&'static str, f64)> {
    vec![("rad/s", 1.0), ("Omega_a", omega_a)]
}

fn time_units(omega_a: f64) -> Vec<(&'static str, f64)> {
    // tau = Omega_a t, so one tau unit is 1/Omega_a seconds
    vec![("s", 1.0), ("tau", 1.0 / omega_a)]
}

fn field_units() -> Vec<(&'static str, f64)> {
    vec![("T", 1.0), ("G", 1e-4)]
}

/// Validate the raw structure into a runnable scenario.
pub fn validate(raw: &RawScenario) -> Result<Scenario, CliError> {
    let top = Fields::new(raw, "");
    let name = top.require_string("name")?;
    if !name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(CliError::validation(
            "name",
            "must be alphanumeric with '_' or '-'",
        ));
    }
    let mode = match top.require_string("mode")?.as_str() {
        "two_level" => Mode::TwoLevel,
        "mathieu" => Mode::Mathieu,
        "svea" => Mode::Svea,
        "atom_h" => Mode::AtomH,
        "atom_rb" => Mode::AtomRb,
        "spin_half" => Mode::SpinHalf,
        other => {
            return Err(CliError::validation(
                "mode",
                format!("unknown mode '{other}' (two_level, mathieu, svea, atom_h, atom_rb, spin_half)"),
            ))
        }
    };
    top.check_unknown()?;

    let out = Fields::new(raw, "output");
    let output = match out.string("format").as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some("both") => OutputFormat::Both,
        Some(other) => {
            return Err(CliError::validation(
                "output.format",
                format!("unknown format '{other}' (csv, json, both)"),
            ))
        }
    };
    out.check_unknown()?;

    let grid = parse_grid(raw)?;

    let run = match mode {
        Mode::TwoLevel => RunSpec::TwoLevel(validate_two_level(raw)?),
        Mode::Mathieu => RunSpec::Mathieu(validate_mathieu(raw)?),
        Mode::Svea => RunSpec::Svea(validate_svea(raw)?),
        Mode::AtomH => RunSpec::Atom(validate_atom(raw, AtomKind::Hydrogen)?),
        Mode::AtomRb => RunSpec::Atom(validate_atom(raw, AtomKind::Rubidium87)?),
        Mode::SpinHalf => RunSpec::SpinHalf(validate_spin_half(raw)?),
    };

    Ok(Scenario {
        name,
        mode,
        output,
        run,
        grid,
    })
}

fn parse_grid(raw: &RawScenario) -> Result<Option<Vec<f64>>, CliError> {
    if !raw.sections.contains_key("grid") {
        return Ok(None);
    }
    let g = Fields::new(raw, "grid");
    let min = g.number("detuning_min")?;
    let max = g.number("detuning_max")?;
    let points = g.number("points")?;
    g.check_unknown()?;
    let (min, max, points) = match (min, max, points) {
        (Some(a), Some(b), Some(p)) => (a, b, p),
        _ => {
            return Err(CliError::validation(
                "grid",
                "needs detuning_min, detuning_max and points",
            ))
        }
    };
    if !(max > min) {
        return Err(CliError::validation(
            "grid.detuning_max",
            "must exceed detuning_min",
        ));
    }
    if points < 1.0 || points.fract() != 0.0 || points > 100_000.0 {
        return Err(CliError::validation(
            "grid.points",
            "must be a positive integer",
        ));
    }
    let n = points as usize;
    let detunings: Vec<f64> = if n == 1 {
        vec![0.5 * (min + max)]
    } else {
        (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect()
    };
    Ok(Some(detunings))
}

struct CommonRun {
    t_end: f64,
    sample_every: f64,
    step: StepControl,
}

fn validate_common_run(
    raw: &RawScenario,
    omega_a: f64,
    extra_allowed: &[&str],
) -> Result<CommonRun, CliError> {
    let run = Fields::new(raw, "run");
    for key in extra_allowed {
        let _ = run.raw(key);
    }
    let tu = time_units(omega_a);
    let t_end = run.require_quantity("t_end", &tu)?;
    if !(t_end > 0.0) {
        return Err(CliError::validation("run.t_end", "must be positive"));
    }
    let sample_every = run
        .quantity("sample_every", &tu)?
        .unwrap_or(t_end / 2000.0);
    let rel_tol = run.number_or("rel_tol", 1e-9)?;
    let abs_tol = run.number_or("abs_tol", 1e-12)?;
    let max_step = run
        .quantity("max_step", &tu)?
        .unwrap_or(0.5 / omega_a);
    let fixed_step = run.quantity("fixed_step", &tu)?;
    if !(rel_tol > 0.0 && abs_tol > 0.0) {
        return Err(CliError::validation(
            "run.rel_tol",
            "tolerances must be positive",
        ));
    }
    run.check_unknown()?;
    Ok(CommonRun {
        t_end,
        sample_every,
        step: StepControl {
            rel_tol,
            abs_tol,
            max_step,
            fixed_step,
        },
    })
}

fn physics_omega_a(phys: &Fields) -> Result<f64, CliError> {
    let omega_a = phys.require_quantity("omega_a", &[("rad/s", 1.0)])?;
    if !(omega_a > 0.0) {
        return Err(CliError::validation("physics.omega_a", "must be positive"));
    }
    Ok(omega_a)
}

fn validate_two_level(raw: &RawScenario) -> Result<TwoLevelRun, CliError> {
    let phys = Fields::new(raw, "physics");
    let omega_a = physics_omega_a(&phys)?;
    let fu = frequency_units(omega_a);
    let nu = phys.require_quantity("nu", &fu)?;
    let omega_0 = phys.quantity("omega_0", &fu)?.unwrap_or(0.0);
    let phase = phys.number_or("phase", 0.0)?;
    if !(nu > 0.0) {
        return Err(CliError::validation("physics.nu", "must be positive"));
    }
    if omega_0 < 0.0 {
        return Err(CliError::validation(
            "physics.omega_0",
            "must be non-negative",
        ));
    }
    phys.check_unknown()?;

    let init = Fields::new(raw, "initial");
    let rho_aa = init.number_or("rho_aa", 0.0)?;
    if !(0.0..=1.0).contains(&rho_aa) {
        return Err(CliError::validation(
            "initial.rho_aa",
            "must lie in [0, 1]",
        ));
    }
    let rho_ab_re = init.number("rho_ab_re")?;
    let rho_ab_im = init.number("rho_ab_im")?;
    let initial = match (rho_ab_re, rho_ab_im) {
        (None, None) => TwoLevelState::pure_seed(rho_aa),
        (re, im) => TwoLevelState::new(
            rho_aa,
            C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)),
        ),
    };
    if !initial.is_physical(1e-9) {
        return Err(CliError::validation(
            "initial.rho_ab_im",
            "coherence exceeds the physical bound |rho_ab|^2 <= rho_aa (1 - rho_aa)",
        ));
    }
    let fu_field = frequency_units(omega_a);
    let omega_s_re = init.quantity("omega_s_re", &fu_field)?.unwrap_or(0.0);
    let omega_s_im = init.quantity("omega_s_im", &fu_field)?.unwrap_or(0.0);
    init.check_unknown()?;

    let common = validate_common_run(raw, omega_a, &["sign_convention"])?;
    let sign = match raw
        .sections
        .get("run")
        .and_then(|m| m.get("sign_convention"))
        .map(|v| v.text.as_str())
    {
        None | Some("canonical") => SignConvention::Canonical,
        Some("mirrored") => SignConvention::Mirrored,
        Some(other) => {
            return Err(CliError::validation(
                "run.sign_convention",
                format!("unknown convention '{other}' (canonical, mirrored)"),
            ))
        }
    };

    Ok(TwoLevelRun {
        cfg: SimConfig {
            cooperative_freq: omega_a,
            drive: DriveSpec {
                omega_0,
                nu,
                phase,
            },
            initial,
            initial_field: FieldState::new(C64::new(omega_s_re, omega_s_im)),
            t_span: (0.0, common.t_end),
            step: common.step,
            sample_every: common.sample_every,
            sign_convention: sign,
        },
    })
}

fn validate_mathieu(raw: &RawScenario) -> Result<MathieuRun, CliError> {
    let phys = Fields::new(raw, "physics");
    let omega_a = physics_omega_a(&phys)?;
    let fu = frequency_units(omega_a);
    let nu = phys.require_quantity("nu", &fu)?;
    let omega_0 = phys.quantity("omega_0", &fu)?.unwrap_or(0.0);
    let epsilon = phys.number("epsilon")?;
    if !(nu > 0.0) {
        return Err(CliError::validation("physics.nu", "must be positive"));
    }
    phys.check_unknown()?;

    let drive = DriveSpec::new(omega_0, nu);
    let params = match epsilon {
        Some(e) => {
            if !(0.0..1.0).contains(&e) {
                return Err(CliError::validation(
                    "physics.epsilon",
                    "must lie in [0, 1)",
                ));
            }
            parametric::params_from_modulation(
                e,
                omega_a * (1.0 - e * e).sqrt(),
                nu,
            )
        }
        None => parametric::derive_params(omega_a, &drive).map_err(|e| {
            CliError::validation("physics.omega_0", e.to_string())
        })?,
    };

    let init = Fields::new(raw, "initial");
    let omega_s = init.quantity("omega_s", &frequency_units(omega_a))?.unwrap_or(0.0);
    let omega_s_dot = init.number_or("omega_s_dot", 0.0)?;
    init.check_unknown()?;

    let common = validate_common_run(raw, omega_a, &[])?;
    Ok(MathieuRun {
        omega_a,
        params,
        drive,
        y0: (omega_s, omega_s_dot),
        t_end: common.t_end,
        sample_every: common.sample_every,
        step: common.step,
    })
}

fn validate_svea(raw: &RawScenario) -> Result<SveaRun, CliError> {
    let phys = Fields::new(raw, "physics");
    let omega_a = physics_omega_a(&phys)?;
    let fu = frequency_units(omega_a);
    let nu = phys.require_quantity("nu", &fu)?;
    let omega_0 = phys.quantity("omega_0", &fu)?.unwrap_or(0.0);
    if !(nu > 0.0) {
        return Err(CliError::validation("physics.nu", "must be positive"));
    }
    phys.check_unknown()?;
    let drive = DriveSpec::new(omega_0, nu);
    let params = parametric::derive_params(omega_a, &drive)
        .map_err(|e| CliError::validation("physics.omega_0", e.to_string()))?;

    let init = Fields::new(raw, "initial");
    let a1 = C64::new(init.number_or("a1_re", 0.0)?, init.number_or("a1_im", 0.0)?);
    let a2 = C64::new(init.number_or("a2_re", 0.0)?, init.number_or("a2_im", 0.0)?);
    init.check_unknown()?;

    let common = validate_common_run(raw, omega_a, &[])?;
    Ok(SveaRun {
        params,
        drive_amp: omega_0,
        nu,
        a0: (a1, a2),
        t_end: common.t_end,
        sample_every: common.sample_every,
        step: common.step,
    })
}

/// Resonant-pair Rabi period of the pumped transition, seconds.
pub fn rabi_period(kind: AtomKind, omega_0: f64) -> f64 {
    let element = match kind {
        AtomKind::Hydrogen => 1.0 / 2.0f64.sqrt(),
        AtomKind::Rubidium87 => 3.0f64.sqrt() / 2.0,
    };
    std::f64::consts::PI / (omega_0 * element)
}

/// The optically pumped initial state of each model.
pub fn pumped_state(kind: AtomKind) -> (HalfInt, HalfInt) {
    match kind {
        AtomKind::Hydrogen => (HalfInt::from_halves(0), HalfInt::from_halves(0)),
        AtomKind::Rubidium87 => (HalfInt::from_int(1), HalfInt::from_int(1)),
    }
}

pub fn parse_level_label(label: &str) -> Option<(HalfInt, HalfInt)> {
    // "F=1,M=-1" with integer or n/2 entries
    let parse_half = |s: &str| -> Option<HalfInt> {
        let s = s.trim();
        if let Some(num) = s.strip_suffix("/2") {
            num.trim().parse::<i32>().ok().map(HalfInt::from_halves)
        } else {
            s.parse::<i32>().ok().map(HalfInt::from_int)
        }
    };
    let (f_part, m_part) = label.split_once(',')?;
    let f = parse_half(f_part.trim().strip_prefix("F=")?)?;
    let m = parse_half(m_part.trim().strip_prefix("M=")?)?;
    Some((f, m))
}

fn validate_atom(raw: &RawScenario, kind: AtomKind) -> Result<AtomRun, CliError> {
    let phys = Fields::new(raw, "physics");
    let b_s = phys.require_quantity("b_s", &field_units())?;
    if !(b_s >= 0.0) {
        return Err(CliError::validation("physics.b_s", "must be non-negative"));
    }
    let omega_0 = coopres_core::constants::MU_BOHR * b_s / coopres_core::constants::HBAR;
    // omega_c directly or from b_z
    let omega_c = match (
        phys.quantity("omega_c", &[("rad/s", 1.0), ("Omega_0", omega_0)])?,
        phys.quantity("b_z", &field_units())?,
    ) {
        (Some(w), None) => w,
        (None, Some(bz)) => coopres_core::multilevel::zeeman_frequency(bz),
        (None, None) => {
            return Err(CliError::validation(
                "physics.omega_c",
                "need omega_c or b_z",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                "physics.omega_c",
                "give either omega_c or b_z, not both",
            ))
        }
    };
    let nu = phys.require_quantity("nu", &[("rad/s", 1.0), ("omega_c", omega_c)])?;
    if !(nu > 0.0) {
        return Err(CliError::validation("physics.nu", "must be positive"));
    }
    phys.check_unknown()?;

    let init = Fields::new(raw, "initial");
    let initial = match init.string("state") {
        None => pumped_state(kind),
        Some(label) => parse_level_label(&label).ok_or_else(|| {
            CliError::validation("initial.state", format!("cannot parse level '{label}'"))
        })?,
    };
    init.check_unknown()?;

    let run = Fields::new(raw, "run");
    let period = rabi_period(kind, omega_0.max(f64::MIN_POSITIVE));
    let tu = vec![("s", 1.0), ("rabi", period)];
    let t_end = run.require_quantity("t_end", &tu)?;
    let sample_every = run.quantity("sample_every", &tu)?.unwrap_or(t_end / 2000.0);
    let dt = run.quantity("dt", &tu)?;
    run.check_unknown()?;

    Ok(AtomRun {
        kind,
        omega_c,
        drive: AtomDrive { b_s, nu },
        initial,
        t_end,
        dt,
        sample_every,
    })
}

fn validate_spin_half(raw: &RawScenario) -> Result<SpinHalfRun, CliError> {
    let phys = Fields::new(raw, "physics");
    let b_s = phys.require_quantity("b_s", &field_units())?;
    let omega_0 = coopres_core::constants::MU_BOHR * b_s / coopres_core::constants::HBAR;
    let omega_c = phys.require_quantity("omega_c", &[("rad/s", 1.0), ("Omega_0", omega_0)])?;
    let nu = phys.require_quantity("nu", &[("rad/s", 1.0), ("omega_c", omega_c)])?;
    let polarization = match phys.require_string("polarization")?.as_str() {
        "lcp" => Polarization::LeftCircular,
        "rcp" => Polarization::RightCircular,
        "linear_x" => Polarization::LinearX,
        other => {
            return Err(CliError::validation(
                "physics.polarization",
                format!("unknown polarization '{other}' (lcp, rcp, linear_x)"),
            ))
        }
    };
    phys.check_unknown()?;

    let run = Fields::new(raw, "run");
    let period = std::f64::consts::PI / omega_0.max(f64::MIN_POSITIVE);
    let tu = vec![("s", 1.0), ("rabi", period)];
    let t_end = run.require_quantity("t_end", &tu)?;
    let sample_every = run.quantity("sample_every", &tu)?.unwrap_or(t_end / 2000.0);
    let dt = run.quantity("dt", &tu)?;
    run.check_unknown()?;

    Ok(SpinHalfRun {
        polarization,
        b_s,
        nu,
        omega_c,
        t_end,
        dt,
        sample_every,
    })
}

/// Render the validated scenario back to the text format (SI units). The
/// rendered text re-parses to an equivalent configuration.
pub fn render(sc: &Scenario) -> String {
    let mut s = String::new();
    use std::fmt::Write;
    let _ = writeln!(s, "name = {}", sc.name);
    let _ = writeln!(s, "mode = {}", sc.mode.as_str());
    let _ = writeln!(s, "\n[output]");
    let _ = writeln!(
        s,
        "format = {}",
        match sc.output {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Both => "both",
        }
    );
    if let Some(grid) = &sc.grid {
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "detuning_min = {:e}", grid.first().unwrap());
        let _ = writeln!(s, "detuning_max = {:e}", grid.last().unwrap());
        let _ = writeln!(s, "points = {}", grid.len());
    }
    match &sc.run {
        RunSpec::TwoLevel(r) => {
            let c = &r.cfg;
            let _ = writeln!(s, "\n[physics]");
            let _ = writeln!(s, "omega_a = {:e} rad/s", c.cooperative_freq);
            let _ = writeln!(s, "nu = {:e} rad/s", c.drive.nu);
            let _ = writeln!(s, "omega_0 = {:e} rad/s", c.drive.omega_0);
            let _ = writeln!(s, "phase = {:e}", c.drive.phase);
            let _ = writeln!(s, "\n[initial]");
            let _ = writeln!(s, "rho_aa = {:e}", c.initial.rho_aa);
            let _ = writeln!(s, "rho_ab_re = {:e}", c.initial.rho_ab.re);
            let _ = writeln!(s, "rho_ab_im = {:e}", c.initial.rho_ab.im);
            let _ = writeln!(s, "omega_s_re = {:e} rad/s", c.initial_field.omega_s.re);
            let _ = writeln!(s, "omega_s_im = {:e} rad/s", c.initial_field.omega_s.im);
            let _ = writeln!(s, "\n[run]");
            let _ = writeln!(s, "t_end = {:e} s", c.t_span.1);
            let _ = writeln!(s, "sample_every = {:e} s", c.sample_every);
            let _ = writeln!(s, "rel_tol = {:e}", c.step.rel_tol);
            let _ = writeln!(s, "abs_tol = {:e}", c.step.abs_tol);
            let _ = writeln!(s, "max_step = {:e} s", c.step.max_step);
            if let Some(h) = c.step.fixed_step {
                let _ = writeln!(s, "fixed_step = {:e} s", h);
            }
            let _ = writeln!(
                s,
                "sign_convention = {}",
                match c.sign_convention {
                    SignConvention::Canonical => "canonical",
                    SignConvention::Mirrored => "mirrored",
                }
            );
        }
        RunSpec::Mathieu(r) => {
            let _ = writeln!(s, "\n[physics]");
            let _ = writeln!(s, "omega_a = {:e} rad/s", r.omega_a);
            let _ = writeln!(s, "nu = {:e} rad/s", r.drive.nu);
            let _ = writeln!(s, "omega_0 = {:e} rad/s", r.drive.omega_0);
            let _ = writeln!(s, "epsilon = {:e}", r.params.epsilon);
            let _ = writeln!(s, "\n[initial]");
            let _ = writeln!(s, "omega_s = {:e} rad/s", r.y0.0);
            let _ = writeln!(s, "omega_s_dot = {:e}", r.y0.1);
            let _ = writeln!(s, "\n[run]");
            let _ = writeln!(s, "t_end = {:e} s", r.t_end);
            let _ = writeln!(s, "sample_every = {:e} s", r.sample_every);
            let _ = writeln!(s, "rel_tol = {:e}", r.step.rel_tol);
            let _ = writeln!(s, "abs_tol = {:e}", r.step.abs_tol);
            let _ = writeln!(s, "max_step = {:e} s", r.step.max_step);
        }
        RunSpec::Svea(r) => {
            let omega_a = r.params.natural_frequency / (1.0 - r.params.epsilon.powi(2)).sqrt();
            let _ = writeln!(s, "\n[physics]");
            let _ = writeln!(s, "omega_a = {:e} rad/s", omega_a);
            let _ = writeln!(s, "nu = {:e} rad/s", r.nu);
            let _ = writeln!(s, "omega_0 = {:e} rad/s", r.drive_amp);
            let _ = writeln!(s, "\n[initial]");
            let _ = writeln!(s, "a1_re = {:e}", r.a0.0.re);
            let _ = writeln!(s, "a1_im = {:e}", r.a0.0.im);
            let _ = writeln!(s, "a2_re = {:e}", r.a0.1.re);
            let _ = writeln!(s, "a2_im = {:e}", r.a0.1.im);
            let _ = writeln!(s, "\n[run]");
            let _ = writeln!(s, "t_end = {:e} s", r.t_end);
            let _ = writeln!(s, "sample_every = {:e} s", r.sample_every);
            let _ = writeln!(s, "rel_tol = {:e}", r.step.rel_tol);
            let _ = writeln!(s, "abs_tol = {:e}", r.step.abs_tol);
            let _ = writeln!(s, "max_step = {:e} s", r.step.max_step);
        }
        RunSpec::Atom(r) => {
            let _ = writeln!(s, "\n[physics]");
            let _ = writeln!(s, "b_s = {:e} T", r.drive.b_s);
            let _ = writeln!(s, "omega_c = {:e} rad/s", r.omega_c);
            let _ = writeln!(s, "nu = {:e} rad/s", r.drive.nu);
            let _ = writeln!(s, "\n[initial]");
            let _ = writeln!(s, "state = F={},M={}", r.initial.0, r.initial.1);
            let _ = writeln!(s, "\n[run]");
            let _ = writeln!(s, "t_end = {:e} s", r.t_end);
            let _ = writeln!(s, "sample_every = {:e} s", r.sample_every);
            if let Some(dt) = r.dt {
                let _ = writeln!(s, "dt = {:e} s", dt);
            }
        }
        RunSpec::SpinHalf(r) => {
            let _ = writeln!(s, "\n[physics]");
            let _ = writeln!(
                s,
                "polarization = {}",
                match r.polarization {
                    Polarization::LeftCircular => "lcp",
                    Polarization::RightCircular => "rcp",
                    Polarization::LinearX => "linear_x",
                }
            );
            let _ = writeln!(s, "b_s = {:e} T", r.b_s);
            let _ = writeln!(s, "omega_c = {:e} rad/s", r.omega_c);
            let _ = writeln!(s, "nu = {:e} rad/s", r.nu);
            let _ = writeln!(s, "\n[run]");
            let _ = writeln!(s, "t_end = {:e} s", r.t_end);
            let _ = writeln!(s, "sample_every = {:e} s", r.sample_every);
            if let Some(dt) = r.dt {
                let _ = writeln!(s, "dt = {:e} s", dt);
            }
        }
    }
    s
}
