//! Closed atom–field dynamics of a two-level ensemble: density-matrix
//! equations coupled to the generated field, the driven phase-parametrized
//! solutions, the oscillator form, and the conserved energy analogue.
//!
//! Simulations run internally in dimensionless time tau = Omega_a * t with
//! the cooperative frequency scaled to 1; inputs and outputs stay in the
//! caller's units.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::numerics::{
    self, IntegrateError, Solution, StateVector, StepControl, TimeUnit,
};

/// Population and coherence of the a–b transition.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TwoLevelState {
    /// Excited-state population, in [0, 1].
    pub rho_aa: f64,
    /// Off-diagonal coherence (dimensionless).
    pub rho_ab: C64,
}

impl TwoLevelState {
    pub fn new(rho_aa: f64, rho_ab: C64) -> Self {
        Self { rho_aa, rho_ab }
    }

    /// Pure state at population `rho_aa` with the default coherence seed
    /// `i * sqrt(rho_aa (1 - rho_aa))`.
    pub fn pure_seed(rho_aa: f64) -> Self {
        Self {
            rho_aa,
            rho_ab: C64::i() * (rho_aa * (1.0 - rho_aa)).max(0.0).sqrt(),
        }
    }

    /// `rho_aa (1 - rho_aa) - |rho_ab|^2`; zero for pure states, conserved
    /// under the closed dynamics.
    pub fn purity_defect(&self) -> f64 {
        self.rho_aa * (1.0 - self.rho_aa) - self.rho_ab.norm_sqr()
    }

    pub fn is_physical(&self, slack: f64) -> bool {
        self.rho_aa >= -slack
            && self.rho_aa <= 1.0 + slack
            && self.rho_ab.norm_sqr() <= self.rho_aa * (1.0 - self.rho_aa) + slack
    }
}

/// Complex slowly-varying amplitude of the generated field, rad/s (or
/// Omega_a units when the configuration is dimensionless).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FieldState {
    pub omega_s: C64,
}

impl FieldState {
    pub fn new(omega_s: C64) -> Self {
        Self { omega_s }
    }

    pub fn zero() -> Self {
        Self {
            omega_s: C64::new(0.0, 0.0),
        }
    }
}

/// External drive `Omega_0 cos(nu t + phase)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DriveSpec {
    /// Drive Rabi amplitude, rad/s, >= 0.
    pub omega_0: f64,
    /// Drive frequency, rad/s, > 0.
    pub nu: f64,
    /// Initial phase, radians.
    pub phase: f64,
}

impl DriveSpec {
    pub fn new(omega_0: f64, nu: f64) -> Self {
        Self {
            omega_0,
            nu,
            phase: 0.0,
        }
    }

    pub fn none(nu: f64) -> Self {
        Self::new(0.0, nu)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.omega_0 * (self.nu * t + self.phase).cos()
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.nu > 0.0) {
            return Err(SimulateError::InvalidConfig("drive.nu must be positive"));
        }
        if self.omega_0 < 0.0 {
            return Err(SimulateError::InvalidConfig(
                "drive.omega_0 must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Which sign pairing of the field equation to integrate. Both conserve the
/// energy analogue; they are related by `rho_ab -> -rho_ab`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum SignConvention {
    /// `d(omega_s)/dt = +i Omega_a^2 rho_ab` with
    /// `d(rho_ab)/dt = +i (1 - 2 rho_aa) Omega_tot`.
    #[default]
    Canonical,
    /// `d(omega_s)/dt = -i Omega_a^2 rho_ab` with the coherence and
    /// population equations flipped jointly (the coherence relabelled by a
    /// minus sign).
    Mirrored,
}

/// Full configuration of one closed-system run.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Cooperative frequency Omega_a, rad/s (1.0 for dimensionless runs).
    pub cooperative_freq: f64,
    pub drive: DriveSpec,
    pub initial: TwoLevelState,
    pub initial_field: FieldState,
    /// Span in the same time unit as `cooperative_freq` implies.
    pub t_span: (f64, f64),
    pub step: StepControl,
    pub sample_every: f64,
    pub sign_convention: SignConvention,
}

impl SimConfig {
    /// Dimensionless configuration (Omega_a = 1, times in tau).
    pub fn dimensionless(
        drive: DriveSpec,
        initial: TwoLevelState,
        initial_field: FieldState,
        t_end: f64,
    ) -> Self {
        Self {
            cooperative_freq: 1.0,
            drive,
            initial,
            initial_field,
            t_span: (0.0, t_end),
            step: StepControl {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                max_step: 0.5,
                fixed_step: None,
            },
            sample_every: 0.25,
            sign_convention: SignConvention::Canonical,
        }
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if !(self.cooperative_freq > 0.0) {
            return Err(SimulateError::InvalidConfig(
                "cooperative_freq must be positive",
            ));
        }
        self.drive.validate()?;
        if !self.initial.is_physical(1e-9) {
            return Err(SimulateError::InvalidConfig(
                "initial state violates 0 <= rho_aa <= 1, |rho_ab|^2 <= rho_aa(1-rho_aa)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("integration aborted: {0}")]
    Integration(#[from] IntegrateError),
    #[error("state invariant violated at tau = {t}: {what}")]
    InvariantViolation { t: f64, what: &'static str },
}

/// Time derivatives of `(rho_aa, rho_ab, omega_s)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub d_rho_aa: f64,
    pub d_rho_ab: C64,
    pub d_omega_s: C64,
}

/// Right-hand side of the closed system at time `t`.
///
/// The total field seen by the atoms is
/// `Omega_tot = omega_s + Omega_0 cos(nu t + phase)`. In the canonical
/// convention:
///
/// ```text
/// d(rho_aa)/dt  = 2 Im(conj(Omega_tot) rho_ab)
/// d(rho_ab)/dt  = i (1 - 2 rho_aa) Omega_tot
/// d(omega_s)/dt = i Omega_a^2 rho_ab
/// ```
///
/// `Mirrored` flips the sign of all three right-hand sides' dependence on
/// `rho_ab`/`Omega_tot` jointly (the substitution `rho_ab -> -rho_ab`),
/// which preserves both the purity defect and the energy analogue.
pub fn rhs_closed_system(
    t: f64,
    state: &TwoLevelState,
    field: &FieldState,
    cfg: &SimConfig,
) -> Derivatives {
    let omega_tot = field.omega_s + C64::from(cfg.drive.value(t));
    let omega_a_sq = cfg.cooperative_freq * cfg.cooperative_freq;
    match cfg.sign_convention {
        SignConvention::Canonical => Derivatives {
            d_rho_aa: 2.0 * (omega_tot.conj() * state.rho_ab).im,
            d_rho_ab: C64::i() * (1.0 - 2.0 * state.rho_aa) * omega_tot,
            d_omega_s: C64::i() * omega_a_sq * state.rho_ab,
        },
        SignConvention::Mirrored => Derivatives {
            d_rho_aa: -2.0 * (omega_tot.conj() * state.rho_ab).im,
            d_rho_ab: -C64::i() * (1.0 - 2.0 * state.rho_aa) * omega_tot,
            d_omega_s: -C64::i() * omega_a_sq * state.rho_ab,
        },
    }
}

/// State layout inside trajectories produced by [`simulate`]:
/// index 0 = rho_aa (real part), 1 = rho_ab, 2 = omega_s.
pub const IDX_RHO_AA: usize = 0;
pub const IDX_RHO_AB: usize = 1;
pub const IDX_OMEGA_S: usize = 2;

/// Integrate the closed system over `cfg.t_span`.
///
/// Internally the equations are scaled to tau = Omega_a t and
/// omega_s / Omega_a; the returned trajectory is mapped back to the
/// configuration's units.
pub fn simulate(cfg: &SimConfig) -> Result<Solution, SimulateError> {
    cfg.validate()?;
    let wa = cfg.cooperative_freq;
    let sign = match cfg.sign_convention {
        SignConvention::Canonical => 1.0,
        SignConvention::Mirrored => -1.0,
    };
    // scaled drive parameters
    let om0 = cfg.drive.omega_0 / wa;
    let nu = cfg.drive.nu / wa;
    let phase = cfg.drive.phase;

    let y0 = StateVector::new(vec![
        C64::from(cfg.initial.rho_aa),
        cfg.initial.rho_ab,
        cfg.initial_field.omega_s / wa,
    ]);
    let tau_span = (cfg.t_span.0 * wa, cfg.t_span.1 * wa);
    let mut ctrl = cfg.step;
    if let Some(h) = ctrl.fixed_step {
        ctrl.fixed_step = Some(h * wa);
    }
    ctrl.max_step *= wa;
    let sample_every = cfg.sample_every * wa;

    let rhs = move |tau: f64, y: &StateVector, dy: &mut StateVector| {
        let rho_aa = y[IDX_RHO_AA].re;
        let rho_ab = y[IDX_RHO_AB];
        let omega_tot = y[IDX_OMEGA_S] + C64::from(om0 * (nu * tau + phase).cos());
        dy[IDX_RHO_AA] = C64::from(sign * 2.0 * (omega_tot.conj() * rho_ab).im);
        dy[IDX_RHO_AB] = sign * C64::i() * (1.0 - 2.0 * rho_aa) * omega_tot;
        dy[IDX_OMEGA_S] = sign * C64::i() * rho_ab;
    };

    let mut sol = numerics::integrate(
        rhs,
        &y0,
        tau_span,
        &ctrl,
        sample_every,
        TimeUnit::DimensionlessTau,
    )?;

    // map back to caller units
    if wa != 1.0 {
        sol.trajectory
            .rescale(1.0 / wa, &[1.0, 1.0, wa], TimeUnit::Seconds);
    }

    for (t, s) in sol
        .trajectory
        .times()
        .iter()
        .zip(sol.trajectory.states())
    {
        let st = TwoLevelState::new(s[IDX_RHO_AA].re, s[IDX_RHO_AB]);
        if !st.is_physical(1e-6) {
            return Err(SimulateError::InvariantViolation {
                t: *t,
                what: "rho_aa or coherence left the physical region",
            });
        }
    }
    Ok(sol)
}

/// Accumulated drive phase `theta(t) = int_0^t [omega_s(t') + Omega_0 cos(nu t' + phase)] dt'`
/// evaluated by quadrature at the integrator's tolerance.
pub fn phase_theta<F>(t: f64, drive: &DriveSpec, omega_s_history: F) -> f64
where
    F: Fn(f64) -> f64,
{
    if t == 0.0 {
        return 0.0;
    }
    let ctrl = StepControl {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_step: (t.abs() / 16.0).min(0.25 / drive.nu.max(1e-300)),
        fixed_step: None,
    };
    let rhs = |s: f64, _y: &StateVector, dy: &mut StateVector| {
        dy[0] = C64::from(omega_s_history(s) + drive.value(s));
    };
    let sol = numerics::integrate(
        rhs,
        &StateVector::zeros(1),
        (0.0, t),
        &ctrl,
        t,
        TimeUnit::DimensionlessTau,
    )
    .expect("phase quadrature cannot fail on finite integrands");
    sol.trajectory.last().1[0].re
}

/// The drive-parametrized family `rho_aa = sin^2(theta)`,
/// `rho_ab = (i/2) sin(2 theta)`; a pure state for every theta.
pub fn analytic_state(theta: f64) -> TwoLevelState {
    TwoLevelState {
        rho_aa: theta.sin().powi(2),
        rho_ab: C64::i() * 0.5 * (2.0 * theta).sin(),
    }
}

/// Weak-field excited population `(epsilon^2 / 2)(1 - cos(2 nu t))`.
pub fn weak_field_population(t: f64, epsilon: f64, nu: f64) -> f64 {
    0.5 * epsilon * epsilon * (1.0 - (2.0 * nu * t).cos())
}

/// Field response of the frozen-population oscillator form.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum OscillatorResponse {
    /// `rho_aa <= 1/2`: harmonic oscillation at `omega`.
    Harmonic { omega: f64 },
    /// `rho_aa > 1/2`: exponential growth at `growth_rate` (superradiant).
    Superradiant { growth_rate: f64 },
}

impl OscillatorResponse {
    /// The frequency or rate, whichever regime applies.
    pub fn value(&self) -> f64 {
        match *self {
            OscillatorResponse::Harmonic { omega } => omega,
            OscillatorResponse::Superradiant { growth_rate } => growth_rate,
        }
    }
}

/// Oscillation frequency `Omega_a sqrt(1 - 2 rho_aa)` below half inversion,
/// growth rate `Omega_a sqrt(2 rho_aa - 1)` above it; zero at `rho_aa = 1/2`.
pub fn oscillator_frequency(rho_aa_frozen: f64, omega_a: f64) -> OscillatorResponse {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&rho_aa_frozen));
    let x = 1.0 - 2.0 * rho_aa_frozen;
    if x >= 0.0 {
        OscillatorResponse::Harmonic {
            omega: omega_a * x.sqrt(),
        }
    } else {
        OscillatorResponse::Superradiant {
            growth_rate: omega_a * (-x).sqrt(),
        }
    }
}

/// Dimensionless energy analogue `rho_aa + |omega_s|^2 / Omega_a^2`,
/// conserved along drive-free trajectories.
pub fn conserved_energy(state: &TwoLevelState, field: &FieldState, omega_a: f64) -> f64 {
    state.rho_aa + field.omega_s.norm_sqr() / (omega_a * omega_a)
}
