//! Analytic parametric-resonance layer: the modulated field oscillator, its
//! slowly-varying-amplitude (SVEA) reduction, characteristic exponents, the
//! resonant closed-form solution, growth-rate extraction from trajectories,
//! and detuning sweeps.
//!
//! The amplitude system integrated by [`svea_rhs`] is
//!
//! ```text
//! dA1/dt =  i Delta A1 - i G A2 - i w0^2 Omega_0 / (2 nu)
//! dA2/dt = -i Delta A2 + i G A1 + i w0^2 Omega_0 / (2 nu)
//! ```
//!
//! with `Delta = (nu^2 - w0^2)/(2 nu)` and `G = eps w0^2/(2 nu)`. In this
//! system the first amplitude multiplies `e^{-i nu t}`, the second
//! `e^{+i nu t}` (see [`reconstruct_field`]). [`simulate_mathieu`] integrates
//! the second-order oscillator whose envelope reduction is exactly this
//! system: modulation depth `2 eps` at frequency `2 nu` and a symmetric
//! two-sideband drive of amplitude `Omega_0` per sideband.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, Solution, StateVector, StepControl, TimeUnit, Trajectory};
use crate::two_level::{self, DriveSpec, FieldState, SimConfig, SignConvention, TwoLevelState};

/// Derived parametric-resonance quantities for one `(Omega_a, Omega_0, nu)`
/// triple.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ParametricParams {
    /// Modulation parameter `eps = Omega_0 / nu` (dimensionless, < 1).
    pub epsilon: f64,
    /// Shifted natural frequency `w0 = Omega_a sqrt(1 - eps^2)`, rad/s.
    pub natural_frequency: f64,
    /// Detuning `Delta = (nu^2 - w0^2) / (2 nu)`, rad/s.
    pub detuning: f64,
    /// Parametric gain `G = eps w0^2 / (2 nu)`, rad/s.
    pub gain: f64,
}

#[derive(Debug, Error)]
pub enum ParametricError {
    #[error("invalid regime: eps = Omega_0/nu = {0} must be < 1")]
    EpsilonOutOfRange(f64),
    #[error("resonant solution needs |Delta| <= 1e-6 G, got |Delta|/G = {0:.3e}")]
    NotResonant(f64),
    #[error("simulation failed: {0}")]
    Simulation(#[from] two_level::SimulateError),
}

/// Compute `(eps, w0, Delta, G)` from the cooperative frequency and drive.
pub fn derive_params(omega_a: f64, drive: &DriveSpec) -> Result<ParametricParams, ParametricError> {
    let epsilon = drive.omega_0 / drive.nu;
    if !(epsilon < 1.0) || epsilon < 0.0 {
        return Err(ParametricError::EpsilonOutOfRange(epsilon));
    }
    let natural_frequency = omega_a * (1.0 - epsilon * epsilon).sqrt();
    let detuning =
        (drive.nu * drive.nu - natural_frequency * natural_frequency) / (2.0 * drive.nu);
    let gain = epsilon * natural_frequency * natural_frequency / (2.0 * drive.nu);
    Ok(ParametricParams {
        epsilon,
        natural_frequency,
        detuning,
        gain,
    })
}

/// Construct parameters directly from `(eps, w0, nu)`; used when the
/// modulation depth is prescribed independently of a drive.
pub fn params_from_modulation(epsilon: f64, natural_frequency: f64, nu: f64) -> ParametricParams {
    ParametricParams {
        epsilon,
        natural_frequency,
        detuning: (nu * nu - natural_frequency * natural_frequency) / (2.0 * nu),
        gain: epsilon * natural_frequency * natural_frequency / (2.0 * nu),
    }
}

/// Characteristic exponents `+/- sqrt(G^2 - Delta^2)`: a real pair inside
/// the instability tongue (`|G| >= |Delta|`), imaginary outside it.
pub fn growth_exponent(params: &ParametricParams) -> (C64, C64) {
    let disc = params.gain * params.gain - params.detuning * params.detuning;
    let lambda = if disc >= 0.0 {
        C64::from(disc.sqrt())
    } else {
        C64::i() * (-disc).sqrt()
    };
    (lambda, -lambda)
}

/// Slowly varying amplitudes of the field; `a1` multiplies `e^{-i nu t}`,
/// `a2` multiplies `e^{+i nu t}`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SveaAmplitudes {
    pub a1: C64,
    pub a2: C64,
}

/// Time derivatives of the SVEA amplitudes.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SveaDerivatives {
    pub d_a1: C64,
    pub d_a2: C64,
}

/// Right-hand side of the amplitude system (autonomous; `t` unused).
pub fn svea_rhs(
    _t: f64,
    amps: &SveaAmplitudes,
    params: &ParametricParams,
    omega_0_drive: f64,
    nu: f64,
) -> SveaDerivatives {
    let w0sq = params.natural_frequency * params.natural_frequency;
    let source = C64::i() * w0sq * omega_0_drive / (2.0 * nu);
    SveaDerivatives {
        d_a1: C64::i() * params.detuning * amps.a1 - C64::i() * params.gain * amps.a2 - source,
        d_a2: -C64::i() * params.detuning * amps.a2 + C64::i() * params.gain * amps.a1 + source,
    }
}

/// Field value `A1 e^{-i nu t} + A2 e^{+i nu t}` (real when `a2 = conj(a1)`).
pub fn reconstruct_field(amps: &SveaAmplitudes, nu: f64, t: f64) -> C64 {
    let ph = C64::i() * nu * t;
    amps.a1 * (-ph).exp() + amps.a2 * ph.exp()
}

/// Closed-form resonant (`Delta = 0`) solution of the amplitude system from
/// `A1(0) = A2(0) = 0`:
///
/// ```text
/// (A1, A2) = S (1-i)/(2G) (1,  i) (e^{Gt} - 1)
///          - S (1+i)/(2G) (1, -i) (1 - e^{-Gt}),    S = w0^2 Omega_0 / (2 nu)
/// ```
///
/// `(1, i)` and `(1, -i)` are the growing and decaying eigenvectors of the
/// drive-free system at `Delta = 0`.
pub fn resonant_solution(
    t: f64,
    params: &ParametricParams,
    omega_0_drive: f64,
    nu: f64,
) -> Result<SveaAmplitudes, ParametricError> {
    let g = params.gain;
    if params.detuning.abs() > 1e-6 * g.abs() {
        return Err(ParametricError::NotResonant(params.detuning.abs() / g.abs()));
    }
    let w0sq = params.natural_frequency * params.natural_frequency;
    let s = w0sq * omega_0_drive / (2.0 * nu);
    let k1 = s * C64::new(1.0, -1.0) / (2.0 * g);
    let k2 = -s * C64::new(1.0, 1.0) / (2.0 * g);
    let grow = (g * t).exp() - 1.0;
    let decay = 1.0 - (-g * t).exp();
    Ok(SveaAmplitudes {
        a1: k1 * grow + k2 * decay,
        a2: C64::i() * k1 * grow - C64::i() * k2 * decay,
    })
}

/// Exact time derivative of [`resonant_solution`], used to evaluate the
/// residual of the closed form against [`svea_rhs`].
pub fn resonant_solution_derivative(
    t: f64,
    params: &ParametricParams,
    omega_0_drive: f64,
    nu: f64,
) -> Result<SveaDerivatives, ParametricError> {
    let g = params.gain;
    if params.detuning.abs() > 1e-6 * g.abs() {
        return Err(ParametricError::NotResonant(params.detuning.abs() / g.abs()));
    }
    let w0sq = params.natural_frequency * params.natural_frequency;
    let s = w0sq * omega_0_drive / (2.0 * nu);
    let k1 = s * C64::new(1.0, -1.0) / (2.0 * g);
    let k2 = -s * C64::new(1.0, 1.0) / (2.0 * g);
    let d_grow = g * (g * t).exp();
    let d_decay = g * (-g * t).exp();
    Ok(SveaDerivatives {
        d_a1: k1 * d_grow + k2 * d_decay,
        d_a2: C64::i() * k1 * d_grow - C64::i() * k2 * d_decay,
    })
}

/// Integrate the amplitude system numerically; trajectory components are
/// `[A1, A2]`.
pub fn integrate_svea(
    params: &ParametricParams,
    omega_0_drive: f64,
    nu: f64,
    a0: SveaAmplitudes,
    t_span: (f64, f64),
    ctrl: &StepControl,
    sample_every: f64,
) -> Result<Solution, two_level::SimulateError> {
    let p = *params;
    let rhs = move |t: f64, y: &StateVector, dy: &mut StateVector| {
        let amps = SveaAmplitudes { a1: y[0], a2: y[1] };
        let d = svea_rhs(t, &amps, &p, omega_0_drive, nu);
        dy[0] = d.d_a1;
        dy[1] = d.d_a2;
    };
    let y0 = StateVector::new(vec![a0.a1, a0.a2]);
    Ok(numerics::integrate(
        rhs,
        &y0,
        t_span,
        ctrl,
        sample_every,
        TimeUnit::DimensionlessTau,
    )?)
}

/// Integrate the modulated field oscillator
///
/// ```text
/// d2(Om)/dt2 = -w0^2 (1 + 2 eps cos(2 nu t)) Om - 2 w0^2 Omega_0 cos(nu t + phase)
/// ```
///
/// as a 2-vector `[Om, dOm/dt]`. In the linear regime the envelope of `Om`
/// grows at the real part of [`growth_exponent`].
pub fn simulate_mathieu(
    params: &ParametricParams,
    drive: &DriveSpec,
    y0: (f64, f64),
    t_span: (f64, f64),
    ctrl: &StepControl,
    sample_every: f64,
) -> Result<Solution, two_level::SimulateError> {
    let w0sq = params.natural_frequency * params.natural_frequency;
    let eps = params.epsilon;
    let d = *drive;
    let rhs = move |t: f64, y: &StateVector, dy: &mut StateVector| {
        let modulation = 1.0 + 2.0 * eps * (2.0 * d.nu * t).cos();
        dy[0] = y[1];
        dy[1] = C64::from(-w0sq) * (modulation * y[0] + C64::from(2.0 * d.value(t)));
    };
    let y0 = StateVector::new(vec![C64::from(y0.0), C64::from(y0.1)]);
    Ok(numerics::integrate(
        rhs,
        &y0,
        t_span,
        ctrl,
        sample_every,
        TimeUnit::DimensionlessTau,
    )?)
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("insufficient data: {found} envelope peaks in window, need at least {needed}")]
    InsufficientPeaks { found: usize, needed: usize },
    #[error("component index {0} out of range")]
    BadComponent(usize),
}

/// Result of an exponential envelope fit.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct GrowthFit {
    /// Least-squares slope of `ln |envelope|` vs time.
    pub rate: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub n_peaks: usize,
}

/// Fit an exponential growth rate to `|state[component]|` over `window` by
/// picking local envelope maxima (with quadratic refinement) and
/// least-squares fitting their logarithms against time.
pub fn fit_growth_rate(
    traj: &Trajectory,
    component: usize,
    window: (f64, f64),
) -> Result<GrowthFit, FitError> {
    if traj.states()[0].len() <= component {
        return Err(FitError::BadComponent(component));
    }
    let ts = traj.times();
    let xs: Vec<f64> = traj.states().iter().map(|s| s[component].norm()).collect();
    let mut pk_t = Vec::new();
    let mut pk_v = Vec::new();
    for i in 1..ts.len() - 1 {
        if ts[i] < window.0 || ts[i] > window.1 {
            continue;
        }
        if xs[i] >= xs[i - 1] && xs[i] >= xs[i + 1] && xs[i] > 0.0 {
            let (y0, y1, y2) = (xs[i - 1], xs[i], xs[i + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            let (dt_frac, v) = if denom < 0.0 {
                let d = 0.5 * (y0 - y2) / denom;
                (d.clamp(-0.5, 0.5), y1 - 0.25 * (y0 - y2) * d.clamp(-0.5, 0.5))
            } else {
                (0.0, y1)
            };
            let h_left = ts[i] - ts[i - 1];
            pk_t.push(ts[i] + dt_frac * h_left);
            pk_v.push(v.max(f64::MIN_POSITIVE));
        }
    }
    const NEEDED: usize = 4;
    if pk_t.len() < NEEDED {
        return Err(FitError::InsufficientPeaks {
            found: pk_t.len(),
            needed: NEEDED,
        });
    }
    // least squares ln v = a t + b
    let n = pk_t.len() as f64;
    let sx: f64 = pk_t.iter().sum();
    let sy: f64 = pk_v.iter().map(|v| v.ln()).sum();
    let sxx: f64 = pk_t.iter().map(|t| t * t).sum();
    let sxy: f64 = pk_t.iter().zip(&pk_v).map(|(t, v)| t * v.ln()).sum();
    let denom = n * sxx - sx * sx;
    let rate = if denom.abs() < 1e-300 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    };
    let intercept = (sy - rate * sx) / n;
    let ss: f64 = pk_t
        .iter()
        .zip(&pk_v)
        .map(|(t, v)| {
            let r = v.ln() - (rate * t + intercept);
            r * r
        })
        .sum();
    Ok(GrowthFit {
        rate,
        residual: (ss / n).sqrt(),
        n_peaks: pk_t.len(),
    })
}

/// One row of a detuning sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    /// `(Omega_a - nu) / Omega_a`.
    pub detuning: f64,
    /// `max |Omega_s| / Omega_a` over the run window (NaN on failure).
    pub max_field: f64,
    /// Fitted envelope growth rate, when enough peaks exist.
    pub growth_rate: Option<f64>,
    /// "ok" or a short failure description.
    pub status: String,
}

/// Per-point run configuration shared by every sweep point. All times and
/// steps are in tau = Omega_a t units.
#[derive(Clone, Debug)]
pub struct SweepRunConfig {
    pub initial: TwoLevelState,
    pub initial_field: FieldState,
    /// Window length in tau = Omega_a t units.
    pub t_end: f64,
    pub sample_every: f64,
    pub step: StepControl,
    pub sign_convention: SignConvention,
    /// Window for growth fitting, tau units; full window when None.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for SweepRunConfig {
    fn default() -> Self {
        Self {
            initial: TwoLevelState::pure_seed(0.1),
            initial_field: FieldState::zero(),
            t_end: 5000.0,
            sample_every: 0.25,
            step: StepControl {
                rel_tol: 1e-9,
                abs_tol: 1e-11,
                max_step: 0.5,
                fixed_step: None,
            },
            sign_convention: SignConvention::Canonical,
        fit_window: None,
        }
    }
}

fn fit_or_none(traj: &Trajectory, component: usize, window: (f64, f64)) -> Option<f64> {
    fit_growth_rate(traj, component, window).ok().map(|f| f.rate)
}

/// Run one full closed-system simulation per grid frequency (in parallel)
/// and report `max |Omega_s| / Omega_a` against the relative detuning
/// `(Omega_a - nu)/Omega_a`. Rows are sorted by detuning; per-point failures
/// are recorded in the row status and do not stop the sweep.
pub fn detuning_sweep(
    omega_a: f64,
    drive_amp: f64,
    nu_grid: &[f64],
    run: &SweepRunConfig,
) -> Vec<SweepPoint> {
    let mut points: Vec<SweepPoint> = nu_grid
        .par_iter()
        .map(|&nu| {
            let detuning = (omega_a - nu) / omega_a;
            let mut step = run.step;
            step.max_step /= omega_a;
            if let Some(h) = step.fixed_step {
                step.fixed_step = Some(h / omega_a);
            }
            let cfg = SimConfig {
                cooperative_freq: omega_a,
                drive: DriveSpec::new(drive_amp, nu),
                initial: run.initial,
                initial_field: run.initial_field,
                t_span: (0.0, run.t_end / omega_a),
                step,
                sample_every: run.sample_every / omega_a,
                sign_convention: run.sign_convention,
            };
            match two_level::simulate(&cfg) {
                Ok(sol) => {
                    let max_field = sol
                        .trajectory
                        .states()
                        .iter()
                        .map(|s| s[two_level::IDX_OMEGA_S].norm())
                        .fold(0.0f64, f64::max)
                        / omega_a;
                    let window = run
                        .fit_window
                        .map(|(a, b)| (a / omega_a, b / omega_a))
                        .unwrap_or((0.0, run.t_end / omega_a));
                    let growth_rate =
                        fit_or_none(&sol.trajectory, two_level::IDX_OMEGA_S, window);
                    SweepPoint {
                        detuning,
                        max_field,
                        growth_rate,
                        status: "ok".to_string(),
                    }
                }
                Err(e) => SweepPoint {
                    detuning,
                    max_field: f64::NAN,
                    growth_rate: None,
                    status: format!("error: {e}"),
                },
            }
        })
        .collect();
    points.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
    points
}

/// Sweep configuration for the linear modulated-oscillator model.
#[derive(Clone, Debug)]
pub struct MathieuSweepConfig {
    pub y0: (f64, f64),
    /// Window length in Omega_a t units.
    pub t_end: f64,
    pub sample_every: f64,
    pub step: StepControl,
    pub fit_window: Option<(f64, f64)>,
}

impl Default for MathieuSweepConfig {
    fn default() -> Self {
        Self {
            y0: (0.0, 0.0),
            t_end: 500.0,
            sample_every: 0.25,
            step: StepControl {
                rel_tol: 1e-9,
                abs_tol: 1e-12,
                max_step: 0.5,
                fixed_step: None,
            },
            fit_window: None,
        }
    }
}

/// Detuning sweep of the linear modulated oscillator: one
/// [`simulate_mathieu`] per grid frequency. The response peaks inside the
/// instability tongue `|Delta| <= G`, i.e. within `~eps^2/2` of zero
/// detuning.
pub fn mathieu_sweep(
    omega_a: f64,
    drive_amp: f64,
    nu_grid: &[f64],
    run: &MathieuSweepConfig,
) -> Vec<SweepPoint> {
    let mut points: Vec<SweepPoint> = nu_grid
        .par_iter()
        .map(|&nu| {
            let detuning = (omega_a - nu) / omega_a;
            let drive = DriveSpec::new(drive_amp, nu);
            let params = match derive_params(omega_a, &drive) {
                Ok(p) => p,
                Err(e) => {
                    return SweepPoint {
                        detuning,
                        max_field: f64::NAN,
                        growth_rate: None,
                        status: format!("error: {e}"),
                    }
                }
            };
            let mut step = run.step;
            step.max_step /= omega_a;
            if let Some(h) = step.fixed_step {
                step.fixed_step = Some(h / omega_a);
            }
            match simulate_mathieu(
                &params,
                &drive,
                run.y0,
                (0.0, run.t_end / omega_a),
                &step,
                run.sample_every / omega_a,
            ) {
                Ok(sol) => {
                    let max_field = sol
                        .trajectory
                        .states()
                        .iter()
                        .map(|s| s[0].norm())
                        .fold(0.0f64, f64::max)
                        / omega_a;
                    let window = run
                        .fit_window
                        .map(|(a, b)| (a / omega_a, b / omega_a))
                        .unwrap_or((0.0, run.t_end / omega_a));
                    let growth_rate = fit_or_none(&sol.trajectory, 0, window);
                    SweepPoint {
                        detuning,
                        max_field,
                        growth_rate,
                        status: "ok".to_string(),
                    }
                }
                Err(e) => SweepPoint {
                    detuning,
                    max_field: f64::NAN,
                    growth_rate: None,
                    status: format!("error: {e}"),
                },
            }
        })
        .collect();
    points.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(re1: f64, im1: f64, re2: f64, im2: f64) -> SveaAmplitudes {
        SveaAmplitudes {
            a1: C64::new(re1, im1),
            a2: C64::new(re2, im2),
        }
    }

    #[test]
    fn derive_params_limits() {
        // Omega_0 = 0
        let p = derive_params(2.0, &DriveSpec::new(0.0, 3.0)).unwrap();
        assert_eq!(p.epsilon, 0.0);
        assert_eq!(p.natural_frequency, 2.0);
        assert_eq!(p.gain, 0.0);
        assert!((p.detuning - (9.0 - 4.0) / 6.0).abs() < 1e-15);

        // nu = Omega_a, Omega_0 = 0.01 Omega_a
        let p = derive_params(1.0, &DriveSpec::new(0.01, 1.0)).unwrap();
        assert!((p.epsilon - 0.01).abs() < 1e-15);
        assert!((p.natural_frequency - (1.0f64 - 1e-4).sqrt()).abs() < 1e-15);
        assert!((p.gain - 0.005 * (1.0 - 1e-4)).abs() < 1e-12);
        assert!((p.detuning - 5e-5).abs() < 1e-7);

        // nu = w0 exactly: Delta = 0
        let w0 = p.natural_frequency;
        let p2 = params_from_modulation(0.01, w0, w0);
        assert_eq!(p2.detuning, 0.0);

        // invalid regime
        assert!(derive_params(1.0, &DriveSpec::new(2.0, 1.0)).is_err());
    }

    #[test]
    fn growth_exponent_cases() {
        let mk = |delta: f64, gain: f64| ParametricParams {
            epsilon: 0.0,
            natural_frequency: 1.0,
            detuning: delta,
            gain,
        };
        let (lp, lm) = growth_exponent(&mk(0.0, 0.5));
        assert_eq!(lp, C64::from(0.5));
        assert_eq!(lm, C64::from(-0.5));
        let (lp, _) = growth_exponent(&mk(0.5, 0.5));
        assert_eq!(lp, C64::from(0.0));
        let (lp, _) = growth_exponent(&mk(0.4, 0.5));
        assert!((lp - C64::from(0.3)).norm() < 1e-15);
        // stable side: imaginary pair
        let (lp, lm) = growth_exponent(&mk(0.5, 0.3));
        assert!((lp - C64::i() * 0.4).norm() < 1e-15);
        assert!((lm + C64::i() * 0.4).norm() < 1e-15);
    }

    #[test]
    fn svea_rhs_source_and_coupling() {
        let p = ParametricParams {
            epsilon: 0.01,
            natural_frequency: 1.0,
            detuning: 0.0,
            gain: 0.005,
        };
        // zero amplitudes: source terms only
        let d = svea_rhs(0.0, &amp(0.0, 0.0, 0.0, 0.0), &p, 0.01, 1.0);
        let s = C64::i() * 0.01 / 2.0;
        assert!((d.d_a1 + s).norm() < 1e-18);
        assert!((d.d_a2 - s).norm() < 1e-18);
        // drive off, Delta = 0: pure cross coupling
        let d = svea_rhs(0.0, &amp(1.0, 0.0, 0.0, 1.0), &p, 0.0, 1.0);
        assert!((d.d_a1 - (-C64::i() * p.gain * C64::i())).norm() < 1e-18);
        assert!((d.d_a2 - C64::i() * p.gain).norm() < 1e-18);
    }

    #[test]
    fn svea_eigenstructure() {
        // (1, i) grows at +G, (1, -i) decays at -G for the drive-free
        // resonant system
        let p = ParametricParams {
            epsilon: 0.01,
            natural_frequency: 1.0,
            detuning: 0.0,
            gain: 0.005,
        };
        let grow = amp(1.0, 0.0, 0.0, 1.0);
        let d = svea_rhs(0.0, &grow, &p, 0.0, 1.0);
        assert!((d.d_a1 - p.gain * grow.a1).norm() < 1e-18);
        assert!((d.d_a2 - p.gain * grow.a2).norm() < 1e-18);
        let decay = amp(1.0, 0.0, 0.0, -1.0);
        let d = svea_rhs(0.0, &decay, &p, 0.0, 1.0);
        assert!((d.d_a1 + p.gain * decay.a1).norm() < 1e-18);
        assert!((d.d_a2 + p.gain * decay.a2).norm() < 1e-18);
    }

    #[test]
    fn resonant_solution_zero_at_origin_and_growth_direction() {
        let p = params_from_modulation(0.01, 1.0, 1.0);
        let a = resonant_solution(0.0, &p, 0.01, 1.0).unwrap();
        assert_eq!(a.a1, C64::from(0.0));
        assert_eq!(a.a2, C64::from(0.0));
        // at large Gt the growing eigenvector (1, i) dominates: a2 ~ i a1
        let t = 8.0 / p.gain;
        let a = resonant_solution(t, &p, 0.01, 1.0).unwrap();
        assert!((a.a2 / a.a1 - C64::i()).norm() < 1e-3);
        // real-field symmetry a2 = conj(a1)
        let a = resonant_solution(123.0, &p, 0.01, 1.0).unwrap();
        assert!((a.a2 - a.a1.conj()).norm() < 1e-12 * a.a1.norm());
        // precondition: detuned params rejected
        let bad = params_from_modulation(0.01, 1.0, 1.01);
        assert!(resonant_solution(1.0, &bad, 0.01, 1.01).is_err());
    }

    #[test]
    fn resonant_solution_satisfies_rhs_identically() {
        let p = params_from_modulation(0.01, 1.0, 1.0);
        for &t in &[0.0, 10.0, 100.0, 400.0, 600.0] {
            let a = resonant_solution(t, &p, 0.01, 1.0).unwrap();
            let lhs = resonant_solution_derivative(t, &p, 0.01, 1.0).unwrap();
            let rhs = svea_rhs(t, &a, &p, 0.01, 1.0);
            let scale = a.a1.norm().max(1.0);
            assert!((lhs.d_a1 - rhs.d_a1).norm() / scale < 1e-12);
            assert!((lhs.d_a2 - rhs.d_a2).norm() / scale < 1e-12);
        }
    }

    #[test]
    fn resonant_solution_matches_numeric_integration() {
        // G = 0.005, w0 = nu = 1, Omega_0 = 0.01, t = 400
        let p = params_from_modulation(0.01, 1.0, 1.0);
        let ctrl = StepControl {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 1.0,
            fixed_step: None,
        };
        let sol = integrate_svea(
            &p,
            0.01,
            1.0,
            amp(0.0, 0.0, 0.0, 0.0),
            (0.0, 400.0),
            &ctrl,
            40.0,
        )
        .unwrap();
        let (t_end, s) = sol.trajectory.last();
        let closed = resonant_solution(*t_end, &p, 0.01, 1.0).unwrap();
        let scale = closed.a1.norm();
        assert!((s[0] - closed.a1).norm() / scale < 1e-6);
        assert!((s[1] - closed.a2).norm() / scale < 1e-6);
    }

    #[test]
    fn mathieu_unmodulated_is_plain_oscillator() {
        // fixed step with samples on step boundaries so every recorded state
        // is a solver state
        let p = params_from_modulation(0.0, 1.0, 1.0);
        let ctrl = StepControl {
            fixed_step: Some(0.0025),
            ..Default::default()
        };
        let sol = simulate_mathieu(&p, &DriveSpec::new(0.0, 1.0), (1.0, 0.0), (0.0, 50.0), &ctrl, 0.05)
            .unwrap();
        for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
            assert!((s[0].re - t.cos()).abs() < 1e-6);
            // amplitude invariant x^2 + (x'/w0)^2 = 1
            let a2 = s[0].re * s[0].re + s[1].re * s[1].re;
            assert!((a2 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mathieu_growth_matches_gain() {
        // seeded, drive-free: envelope e-folds at G within 2%
        let eps = 0.01;
        let p = params_from_modulation(eps, 1.0, 1.0);
        let g = p.gain;
        let ctrl = StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_step: 0.2,
            fixed_step: None,
        };
        let sol = simulate_mathieu(
            &p,
            &DriveSpec::new(0.0, 1.0),
            (1.0, 0.0),
            (0.0, 4.0 / g),
            &ctrl,
            0.05,
        )
        .unwrap();
        let fit = fit_growth_rate(&sol.trajectory, 0, (1.5 / g, 4.0 / g)).unwrap();
        assert!(
            (fit.rate - g).abs() / g < 0.02,
            "fit {} vs G {}",
            fit.rate,
            g
        );
    }

    #[test]
    fn mathieu_outside_tongue_stays_bounded() {
        // |Delta| = 2G: no secular growth over 20/G
        let eps = 0.01;
        let w0: f64 = 1.0;
        let g0 = eps * w0 / 2.0;
        let delta = 2.0 * g0;
        // nu solving (nu^2 - w0^2)/(2 nu) = delta
        let nu = delta + (delta * delta + w0 * w0).sqrt();
        let p = params_from_modulation(eps, w0, nu);
        assert!(p.detuning > p.gain);
        let ctrl = StepControl {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 0.2,
            fixed_step: None,
        };
        let sol = simulate_mathieu(
            &p,
            &DriveSpec::new(0.0, nu),
            (1.0, 0.0),
            (0.0, 20.0 / p.gain),
            &ctrl,
            0.1,
        )
        .unwrap();
        let max_amp = |lo: f64, hi: f64| {
            sol.trajectory
                .times()
                .iter()
                .zip(sol.trajectory.states())
                .filter(|(t, _)| **t >= lo && **t <= hi)
                .map(|(_, s)| s[0].norm())
                .fold(0.0f64, f64::max)
        };
        let early = max_amp(0.0, 2.0 / p.gain);
        let all = max_amp(0.0, 20.0 / p.gain);
        assert!(all <= 3.0 * early, "all {} early {}", all, early);
    }

    #[test]
    fn fit_growth_rate_synthetic() {
        // |x| = e^{0.3 t} |cos t| -> slope 0.3
        let n = 4000;
        let tmax = 40.0;
        let times: Vec<f64> = (0..n).map(|i| tmax * i as f64 / (n - 1) as f64).collect();
        let states: Vec<StateVector> = times
            .iter()
            .map(|t| StateVector::from_reals(&[(0.3 * t).exp() * t.cos()]))
            .collect();
        let traj = Trajectory::new(times, states, TimeUnit::DimensionlessTau).unwrap();
        let fit = fit_growth_rate(&traj, 0, (0.0, tmax)).unwrap();
        assert!((fit.rate - 0.3).abs() < 0.01, "rate {}", fit.rate);

        // constant signal -> slope 0
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let states: Vec<StateVector> = times
            .iter()
            .map(|_| StateVector::from_reals(&[2.5]))
            .collect();
        let traj = Trajectory::new(times, states, TimeUnit::DimensionlessTau).unwrap();
        let fit = fit_growth_rate(&traj, 0, (0.0, 99.0)).unwrap();
        assert!(fit.rate.abs() < 1e-12);

        // too few peaks -> error
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let states: Vec<StateVector> = times
            .iter()
            .map(|t| StateVector::from_reals(&[*t]))
            .collect();
        let traj = Trajectory::new(times, states, TimeUnit::DimensionlessTau).unwrap();
        assert!(matches!(
            fit_growth_rate(&traj, 0, (0.0, 4.0)),
            Err(FitError::InsufficientPeaks { .. })
        ));
    }

    #[test]
    fn degenerate_sweep_equals_single_simulation() {
        let run = SweepRunConfig {
            t_end: 200.0,
            ..Default::default()
        };
        let pts = detuning_sweep(1.0, 0.01, &[1.0], &run);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].status, "ok");
        let cfg = SimConfig {
            cooperative_freq: 1.0,
            drive: DriveSpec::new(0.01, 1.0),
            initial: run.initial,
            initial_field: run.initial_field,
            t_span: (0.0, 200.0),
            step: run.step,
            sample_every: run.sample_every,
            sign_convention: run.sign_convention,
        };
        let sol = two_level::simulate(&cfg).unwrap();
        let max_f = sol
            .trajectory
            .states()
            .iter()
            .map(|s| s[two_level::IDX_OMEGA_S].norm())
            .fold(0.0f64, f64::max);
        assert!((pts[0].max_field - max_f).abs() < 1e-14);
    }

    #[test]
    fn closed_system_sweep_response_shape() {
        // Small-seed closed-system sweep: the response leans to positive
        // detuning (the softening collective oscillation captures a drive
        // slightly below resonance and rides it to a higher amplitude), and
        // half-detuned drives stay below 10% of the peak.
        let seed = 0.01;
        let run = SweepRunConfig {
            initial: TwoLevelState::new(
                seed * seed,
                C64::i() * seed * (1.0 - seed * seed).sqrt(),
            ),
            t_end: 5000.0,
            sample_every: 0.25,
            ..Default::default()
        };
        let detunings = [-0.5, -0.05, -0.025, 0.0, 0.025, 0.05, 0.5];
        let nu_grid: Vec<f64> = detunings.iter().map(|d| 1.0 - d).collect();
        let pts = detuning_sweep(1.0, 0.01, &nu_grid, &run);
        assert!(pts.iter().all(|p| p.status == "ok"));
        let peak = pts
            .iter()
            .max_by(|a, b| a.max_field.total_cmp(&b.max_field))
            .unwrap();
        assert!(
            (peak.detuning - 0.025).abs() < 1e-12,
            "peak at {}",
            peak.detuning
        );
        let far = pts
            .iter()
            .filter(|p| p.detuning.abs() > 0.4)
            .map(|p| p.max_field)
            .fold(0.0f64, f64::max);
        assert!(
            far < 0.1 * peak.max_field,
            "far {far} vs peak {}",
            peak.max_field
        );
    }

    #[test]
    fn sweep_reports_failures_and_continues() {
        // nu = 0 is an invalid drive; the sweep must record it and move on
        let run = SweepRunConfig {
            t_end: 50.0,
            ..Default::default()
        };
        let pts = detuning_sweep(1.0, 0.01, &[0.0, 1.0], &run);
        assert_eq!(pts.len(), 2);
        let bad = pts.iter().find(|p| p.detuning == 1.0).unwrap();
        assert!(bad.status.starts_with("error"));
        assert!(bad.max_field.is_nan());
        let good = pts.iter().find(|p| p.detuning == 0.0).unwrap();
        assert_eq!(good.status, "ok");
    }
}
