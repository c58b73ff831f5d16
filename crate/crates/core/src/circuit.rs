//! Coupling chain from an oscillating atomic magnetization to the LC pickup
//! circuit and back: near-zone dipole field, EMF, circuit response,
//! Biot–Savart coil field, the envelope (SVEA) reduction of the field
//! equation, and the cooperative-frequency calculators.
//!
//! Everything in this chain is SI. The near-zone electric field of an
//! oscillating magnetic dipole is `E = -i (mu_0 omega / 4 pi) (n x mu) / r^2`
//! (impedance factor `mu_0 c` combined with `k = omega / c`), which makes
//! the EMF come out in volts and the closed-form cooperative frequency
//!
//! ```text
//! Omega_a^2 = omega_s mu_0^2 mu_ab^2 turns^2 N_spins / (8 hbar L_s a_s^2)
//! ```
//!
//! land on rad/s; see the `si` unit audit exercised by the tests. The
//! optical-range estimator keeps its Gaussian-unit form and is flagged as
//! such.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{HBAR, HBAR_CGS, K_BOLTZMANN, MU_0, SPEED_OF_LIGHT};
use crate::numerics::{self, Solution, StateVector, StepControl, TimeUnit};

/// SI dimension bookkeeping for the audit trail (powers of m, kg, s, A).
pub mod si {
    use serde::Serialize;

    #[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
    pub struct Dim {
        pub m: i8,
        pub kg: i8,
        pub s: i8,
        pub a: i8,
    }

    impl Dim {
        pub const fn mul(self, o: Dim) -> Dim {
            Dim {
                m: self.m + o.m,
                kg: self.kg + o.kg,
                s: self.s + o.s,
                a: self.a + o.a,
            }
        }

        pub const fn div(self, o: Dim) -> Dim {
            Dim {
                m: self.m - o.m,
                kg: self.kg - o.kg,
                s: self.s - o.s,
                a: self.a - o.a,
            }
        }

        pub const fn powi(self, n: i8) -> Dim {
            Dim {
                m: self.m * n,
                kg: self.kg * n,
                s: self.s * n,
                a: self.a * n,
            }
        }
    }

    pub const NONE: Dim = Dim { m: 0, kg: 0, s: 0, a: 0 };
    pub const METER: Dim = Dim { m: 1, kg: 0, s: 0, a: 0 };
    pub const SECOND: Dim = Dim { m: 0, kg: 0, s: 1, a: 0 };
    pub const AMPERE: Dim = Dim { m: 0, kg: 0, s: 0, a: 1 };
    pub const PER_SECOND: Dim = Dim { m: 0, kg: 0, s: -1, a: 0 };
    pub const PER_METER: Dim = Dim { m: -1, kg: 0, s: 0, a: 0 };
    pub const VELOCITY: Dim = Dim { m: 1, kg: 0, s: -1, a: 0 };
    pub const JOULE: Dim = Dim { m: 2, kg: 1, s: -2, a: 0 };
    pub const JOULE_SECOND: Dim = Dim { m: 2, kg: 1, s: -1, a: 0 };
    pub const TESLA: Dim = Dim { m: 0, kg: 1, s: -2, a: -1 };
    pub const VOLT: Dim = Dim { m: 2, kg: 1, s: -3, a: -1 };
    pub const HENRY: Dim = Dim { m: 2, kg: 1, s: -2, a: -2 };
    pub const FARAD: Dim = Dim { m: -2, kg: -1, s: 4, a: 2 };
    pub const JOULE_PER_TESLA: Dim = Dim { m: 2, kg: 0, s: 0, a: 1 };
    pub const MU0: Dim = Dim { m: 1, kg: 1, s: -2, a: -2 };

    impl std::fmt::Display for Dim {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            let named = match *self {
                NONE => Some("1"),
                METER => Some("m"),
                SECOND => Some("s"),
                AMPERE => Some("A"),
                PER_SECOND => Some("rad/s"),
                PER_METER => Some("1/m"),
                JOULE => Some("J"),
                TESLA => Some("T"),
                VOLT => Some("V"),
                HENRY => Some("H"),
                FARAD => Some("F"),
                JOULE_PER_TESLA => Some("J/T"),
                _ => None,
            };
            if let Some(n) = named {
                return write!(f, "{n}");
            }
            let mut parts = Vec::new();
            for (sym, p) in [("m", self.m), ("kg", self.kg), ("s", self.s), ("A", self.a)] {
                if p != 0 {
                    parts.push(if p == 1 {
                        sym.to_string()
                    } else {
                        format!("{sym}^{p}")
                    });
                }
            }
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Pickup coil plus its tank capacitor.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CoilSpec {
    /// Coil radius a_s, meters.
    pub radius: f64,
    /// Inductance L_s, henry.
    pub inductance: f64,
    /// Tank capacitance C_s, farad.
    pub capacitance: f64,
    pub turns: u32,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit/sample parameter: {0}")]
    Invalid(&'static str),
    #[error("integration aborted: {0}")]
    Integration(#[from] numerics::IntegrateError),
}

impl CoilSpec {
    pub fn new(radius: f64, inductance: f64, capacitance: f64, turns: u32) -> Self {
        Self {
            radius,
            inductance,
            capacitance,
            turns,
        }
    }

    /// Single-loop reference coil: a_s = 1 cm, wire radius 0.5 mm, inductance
    /// from the circular-loop formula `mu_0 a (ln(8a/r_w) - 2)`, capacitor
    /// tuned to `omega_s` = 2e9 rad/s.
    pub fn reference() -> Self {
        let radius = 0.01;
        let wire_radius = 5e-4;
        let inductance = MU_0 * radius * ((8.0 * radius / wire_radius).ln() - 2.0);
        Self {
            radius,
            inductance,
            capacitance: 0.0,
            turns: 1,
        }
        .tuned_to(2.0e9)
    }

    /// Same coil with the capacitor retuned so `resonant_frequency() = omega`.
    pub fn tuned_to(mut self, omega: f64) -> Self {
        self.capacitance = 1.0 / (self.inductance * omega * omega);
        self
    }

    /// `omega_s = 1 / sqrt(L_s C_s)`, rad/s.
    pub fn resonant_frequency(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.radius > 0.0 && self.inductance > 0.0 && self.capacitance > 0.0) {
            return Err(CircuitError::Invalid(
                "coil radius, inductance and capacitance must be positive",
            ));
        }
        if self.turns == 0 {
            return Err(CircuitError::Invalid("coil needs at least one turn"));
        }
        if !self.resonant_frequency().is_finite() {
            return Err(CircuitError::Invalid("resonant frequency not finite"));
        }
        Ok(())
    }
}

/// Spin sample at the coil center.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct SampleSpec {
    /// Spin density N, 1/m^3.
    pub density: f64,
    /// Sample volume, m^3.
    pub volume: f64,
    /// Transition magnetic moment mu_ab, J/T.
    pub mu_ab: f64,
    /// Transition frequency omega_ab, rad/s.
    pub omega_ab: f64,
}

impl SampleSpec {
    /// Total spin count `N_spins = N * V`.
    pub fn spin_count(&self) -> f64 {
        self.density * self.volume
    }

    /// Reference sample: density 1e19 m^-3 (1e13 cm^-3), coil-enclosed
    /// sphere of the given radius, mu_ab = mu_B, omega_ab = 2e9 rad/s.
    pub fn reference(coil_radius: f64) -> Self {
        Self {
            density: 1.0e19,
            volume: 4.0 / 3.0 * std::f64::consts::PI * coil_radius.powi(3),
            mu_ab: crate::constants::MU_BOHR,
            omega_ab: 2.0e9,
        }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.density > 0.0 && self.volume > 0.0 && self.mu_ab >= 0.0 && self.omega_ab > 0.0)
        {
            return Err(CircuitError::Invalid(
                "sample density, volume and omega_ab must be positive",
            ));
        }
        Ok(())
    }
}

/// Magnitude of the loop integral `J = closed-int dl x n / r^2` for a sample
/// at the coil center: `2 pi turns / a_s`, directed along the coil axis
/// (1/m).
pub fn geometry_integral(coil: &CoilSpec) -> f64 {
    2.0 * std::f64::consts::PI * coil.turns as f64 / coil.radius
}

/// Near-zone EMF induced in the coil by an oscillating magnetic moment
/// (axial component `mu_axial`, J/T) radiating at wavenumber `k = omega/c`.
#[derive(Copy, Clone, Debug)]
pub struct EmfResult {
    /// Complex EMF amplitude, volts: `-i (mu_0 c k / 4 pi) mu J`.
    pub volts: C64,
    /// False when `k a_s >= 0.1` (outside the near zone; value still
    /// returned).
    pub near_zone_ok: bool,
}

pub fn dipole_emf(mu_axial: C64, k: f64, coil: &CoilSpec) -> EmfResult {
    let j = geometry_integral(coil);
    let volts = -C64::i() * (MU_0 * SPEED_OF_LIGHT * k / (4.0 * std::f64::consts::PI))
        * mu_axial
        * j;
    EmfResult {
        volts,
        near_zone_ok: k * coil.radius < 0.1,
    }
}

/// Magnetic field at the coil center per the Biot–Savart law,
/// `mu_0 turns I / (2 a_s)` (tesla). Equals `(mu_0 / 4 pi) I J` with the
/// same geometry integral.
pub fn biot_savart_center(coil: &CoilSpec, current: f64) -> f64 {
    MU_0 * coil.turns as f64 * current / (2.0 * coil.radius)
}

/// Drive the series LC circuit `L_s dI/dt + q_s / C_s = V(t)`, `dq/dt = I`,
/// from `(i0, q0)`. Trajectory components: `[I_s, q_s]`.
///
/// Integrating the first-order pair avoids differentiating the EMF; a step
/// in `V` leaves `I_s` continuous and jumps `dI/dt` by `dV / L_s`.
pub fn circuit_response<F>(
    coil: &CoilSpec,
    emf: F,
    i0: f64,
    q0: f64,
    t_span: (f64, f64),
    ctrl: &StepControl,
    sample_every: f64,
) -> Result<Solution, CircuitError>
where
    F: Fn(f64) -> f64,
{
    coil.validate()?;
    let l = coil.inductance;
    let c = coil.capacitance;
    let rhs = move |t: f64, y: &StateVector, dy: &mut StateVector| {
        dy[0] = C64::from((emf(t) - y[1].re / c) / l);
        dy[1] = y[0];
    };
    let y0 = StateVector::from_reals(&[i0, q0]);
    Ok(numerics::integrate(
        rhs,
        &y0,
        t_span,
        ctrl,
        sample_every,
        TimeUnit::Seconds,
    )?)
}

/// Cooperative frequency of the RF pickup chain,
/// `Omega_a = sqrt(omega_s / (2 hbar L_s)) * (mu_0 mu_ab J / 4 pi) * sqrt(N_spins)`
/// with `J` the coil geometry integral; equals
/// `sqrt(omega_s mu_0^2 mu_ab^2 turns^2 N_spins / (8 hbar L_s a_s^2))`.
pub fn cooperative_frequency_rf(coil: &CoilSpec, sample: &SampleSpec) -> f64 {
    let omega_s = coil.resonant_frequency();
    let j = geometry_integral(coil);
    let coupling = MU_0 * sample.mu_ab * j / (4.0 * std::f64::consts::PI);
    (omega_s / (2.0 * HBAR * coil.inductance) * coupling * coupling * sample.spin_count()).sqrt()
}

/// Optical-range cooperative frequency in Gaussian units:
/// `Omega_a = sqrt((2 pi / hbar) omega_ab dipole^2 N)` with the dipole in
/// statC·cm, density in 1/cm^3, hbar in erg·s. Order-of-magnitude
/// estimator only.
pub fn cooperative_frequency_optical(omega_ab: f64, dipole_gauss: f64, density_cm3: f64) -> f64 {
    (2.0 * std::f64::consts::PI / HBAR_CGS * omega_ab * dipole_gauss * dipole_gauss * density_cm3)
        .sqrt()
}

/// Boltzmann-limited NMR polarization estimate.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct NmrEstimate {
    /// Polarized density `Delta N_ab = N_0 Delta E / (k_B T)`, 1/m^3.
    pub delta_n_ab: f64,
    /// Cooperative frequency of the polarized fraction in the given coil
    /// (capacitor retuned to the transition), rad/s.
    pub omega_a_hint: f64,
    /// False when `Delta E / k_B T > 0.1` (linearization invalid).
    pub linearization_ok: bool,
}

/// Estimate the polarized spin density and its cooperative frequency for a
/// thermal sample: `density_n0` in 1/m^3, `delta_e` in joules, `mu_ab` in
/// J/T.
pub fn nmr_estimate(
    density_n0: f64,
    delta_e: f64,
    temperature: f64,
    coil: &CoilSpec,
    mu_ab: f64,
) -> Result<NmrEstimate, CircuitError> {
    if !(temperature > 0.0) {
        return Err(CircuitError::Invalid("temperature must be positive"));
    }
    let x = delta_e / (K_BOLTZMANN * temperature);
    let delta_n_ab = density_n0 * x;
    let omega_ab = delta_e / HBAR;
    let omega_a_hint = if delta_n_ab > 0.0 && omega_ab > 0.0 {
        let tuned = coil.tuned_to(omega_ab);
        let sample = SampleSpec {
            density: delta_n_ab,
            volume: 4.0 / 3.0 * std::f64::consts::PI * coil.radius.powi(3),
            mu_ab,
            omega_ab,
        };
        cooperative_frequency_rf(&tuned, &sample)
    } else {
        0.0
    };
    Ok(NmrEstimate {
        delta_n_ab,
        omega_a_hint,
        linearization_ok: x <= 0.1,
    })
}

/// Outcome of comparing the full second-order field equation against its
/// first-order envelope reduction.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct SveaReport {
    /// `Omega_a / omega_s` for the given coil and sample.
    pub ratio: f64,
    /// Max relative deviation of the two envelopes over the run.
    pub max_rel_deviation: f64,
    /// False when the deviation exceeds 5%.
    pub svea_valid: bool,
}

/// Drive both field equations with the prescribed coherence envelope
/// `rho_ab(t) = rho_amplitude * cos(Omega_a t)` and compare envelopes over
/// `n_envelope_periods` of the cooperative oscillation.
///
/// Full route: the real oscillator
/// `d2(Om)/dt2 + omega_s^2 Om = -2 omega_s Omega_a^2 [rho_ab(t) e^{-i omega_s t} + c.c.]`,
/// with the positive-frequency envelope extracted as
/// `e^{+i omega_s t} (Om + i Om'/omega_s) / 2`. Reduced route:
/// `d(Om_env)/dt = -i Omega_a^2 rho_ab(t)`. The reduction drops the
/// second envelope derivative and the counter-rotating half of the source,
/// so the deviation scales as `Omega_a / omega_s`.
pub fn svea_consistency_check(
    coil: &CoilSpec,
    sample: &SampleSpec,
    rho_amplitude: f64,
    n_envelope_periods: f64,
) -> Result<SveaReport, CircuitError> {
    coil.validate()?;
    sample.validate()?;
    let omega_s = coil.resonant_frequency();
    let omega_a = cooperative_frequency_rf(coil, sample);
    let ratio = omega_a / omega_s;
    if rho_amplitude == 0.0 {
        return Ok(SveaReport {
            ratio,
            max_rel_deviation: 0.0,
            svea_valid: true,
        });
    }

    // dimensionless time tau = omega_s t; r = Omega_a / omega_s
    let r = ratio;
    let tau_end = n_envelope_periods * std::f64::consts::TAU / r;
    let rho = move |tau: f64| rho_amplitude * (r * tau).cos();

    // full (real field): y = [Om, Om'], Om'' = -Om - 4 r^2 rho cos(tau)
    let full_rhs = move |tau: f64, y: &StateVector, dy: &mut StateVector| {
        dy[0] = y[1];
        dy[1] = -y[0] - C64::from(4.0 * r * r * rho(tau) * tau.cos());
    };
    // reduced: env' = -i r^2 rho
    let env_rhs = move |tau: f64, _y: &StateVector, dy: &mut StateVector| {
        dy[0] = -C64::i() * r * r * rho(tau);
    };
    let ctrl = StepControl {
        rel_tol: 1e-10,
        abs_tol: 1e-13,
        max_step: 0.2,
        fixed_step: None,
    };
    let sample_every = tau_end / 2000.0;
    let full = numerics::integrate(
        full_rhs,
        &StateVector::zeros(2),
        (0.0, tau_end),
        &ctrl,
        sample_every,
        TimeUnit::DimensionlessTau,
    )?;
    let reduced = numerics::integrate(
        env_rhs,
        &StateVector::zeros(1),
        (0.0, tau_end),
        &ctrl,
        sample_every,
        TimeUnit::DimensionlessTau,
    )?;

    let env_scale = reduced
        .trajectory
        .states()
        .iter()
        .map(|s| s[0].norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (tau, s) in full.trajectory.times().iter().zip(full.trajectory.states()) {
        let env_full = (C64::i() * tau).exp() * (s[0] + C64::i() * s[1]) / 2.0;
        let env_red = reduced.trajectory.sample(*tau)[0];
        worst = worst.max((env_full - env_red).norm() / env_scale);
    }
    Ok(SveaReport {
        ratio,
        max_rel_deviation: worst,
        svea_valid: worst < 0.05,
    })
}

/// One step of the RF-chain audit trail: quantity, value, SI unit.
#[derive(Clone, Debug, Serialize)]
pub struct AuditEntry {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
}

/// Values and units of every intermediate in the cooperative-frequency
/// chain, for display by calculators.
pub fn rf_chain_audit(coil: &CoilSpec, sample: &SampleSpec) -> Vec<AuditEntry> {
    use si::*;
    let omega_s = coil.resonant_frequency();
    let j = geometry_integral(coil);
    let coupling = MU_0 * sample.mu_ab * j / (4.0 * std::f64::consts::PI);
    let omega_a = cooperative_frequency_rf(coil, sample);
    let coupling_dim = MU0.mul(JOULE_PER_TESLA).mul(PER_METER);
    let omega_a_sq_dim = PER_SECOND
        .mul(coupling_dim.powi(2))
        .div(JOULE_SECOND.mul(HENRY));
    vec![
        AuditEntry {
            quantity: "omega_s".into(),
            value: omega_s,
            unit: PER_SECOND.to_string(),
        },
        AuditEntry {
            quantity: "geometry_integral".into(),
            value: j,
            unit: PER_METER.to_string(),
        },
        AuditEntry {
            quantity: "mu0_mu_ab_J_over_4pi".into(),
            value: coupling,
            unit: coupling_dim.to_string(),
        },
        AuditEntry {
            quantity: "spin_count".into(),
            value: sample.spin_count(),
            unit: NONE.to_string(),
        },
        AuditEntry {
            quantity: "omega_a_squared".into(),
            value: omega_a * omega_a,
            unit: omega_a_sq_dim.to_string(),
        },
        AuditEntry {
            quantity: "omega_a".into(),
            value: omega_a,
            unit: PER_SECOND.to_string(),
        },
    ]
}
