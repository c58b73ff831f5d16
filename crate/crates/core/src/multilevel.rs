//! Spin-1/2, hydrogen, and ⁸⁷Rb hyperfine models: polarization-resolved
//! spin-1/2 couplings, Clebsch–Gordan composition of the hyperfine basis,
//! exact transition-moment tables in units of `mu_S = g_s mu_B`, the
//! time-dependent coupling matrices, and norm-preserving Schrödinger
//! integration.
//!
//! Amplitude dynamics are propagated with a Cayley (implicit-midpoint)
//! stepper: the one-step map `(I + i h M/2)^{-1} (I - i h M/2)` is unitary
//! for Hermitian `M`, so the state norm is conserved to rounding over
//! arbitrarily long runs — explicit Runge–Kutta steppers drift secularly
//! and cannot hold the norm bounds this module is tested to.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::constants::{G_S, HBAR, MU_BOHR};
use crate::numerics::{CMatrix, Sampler, Solution, StateVector, StepStats, TimeUnit};

/// Half-integer stored as twice its value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_halves(twice: i32) -> Self {
        Self(twice)
    }

    pub const fn from_int(v: i32) -> Self {
        Self(2 * v)
    }

    pub const fn halves(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Exact value of the form `sign * mult * sqrt(rad) / den`.
///
/// Canonical form: `rad` squarefree, `gcd(mult, den) = 1`, zero represented
/// with `sign = 0`. Closed under negation and multiplication, which is all
/// the transition-moment algebra needs.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    sign: i8,
    mult: u64,
    rad: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Split n into (m, r) with n = m^2 * r and r squarefree.
fn extract_square(mut n: u64) -> (u64, u64) {
    let mut m = 1u64;
    let mut d = 2u64;
    while d * d <= n {
        while n.is_multiple_of(d * d) {
            n /= d * d;
            m *= d;
        }
        d += 1;
    }
    (m, n)
}

impl Surd {
    pub const ZERO: Surd = Surd {
        sign: 0,
        mult: 0,
        rad: 1,
        den: 1,
    };

    pub const ONE: Surd = Surd {
        sign: 1,
        mult: 1,
        rad: 1,
        den: 1,
    };

    fn canonical(sign: i8, mult: u64, rad: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        if sign == 0 || mult == 0 || rad == 0 {
            return Self::ZERO;
        }
        let (sq, rad) = extract_square(rad);
        let mult = mult * sq;
        let g = gcd(mult, den);
        Self {
            sign,
            mult: mult / g,
            rad,
            den: den / g,
        }
    }

    /// `sign(num) * sqrt(|num| / den)`.
    pub fn sqrt_ratio(num: i64, den: u64) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let sign = if num > 0 { 1 } else { -1 };
        // sqrt(p/q) = sqrt(p q) / q
        let p = num.unsigned_abs();
        Self::canonical(sign, 1, p * den, den)
    }

    /// Rational `num / den`.
    pub fn ratio(num: i64, den: u64) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let sign = if num > 0 { 1 } else { -1 };
        Self::canonical(sign, num.unsigned_abs(), 1, den)
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn neg(&self) -> Self {
        Self {
            sign: -self.sign,
            ..*self
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::canonical(
            self.sign * other.sign,
            self.mult * other.mult,
            self.rad * other.rad,
            self.den * other.den,
        )
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.mult as f64 * (self.rad as f64).sqrt() / self.den as f64
    }
}

impl std::fmt::Display for Surd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        if self.sign < 0 {
            write!(f, "-")?;
        }
        match (self.mult, self.rad, self.den) {
            (m, 1, 1) => write!(f, "{m}"),
            (m, 1, d) => write!(f, "{m}/{d}"),
            (1, r, 1) => write!(f, "sqrt({r})"),
            (1, r, d) => write!(f, "sqrt({r})/{d}"),
            (m, r, 1) => write!(f, "{m}*sqrt({r})"),
            (m, r, d) => write!(f, "{m}*sqrt({r})/{d}"),
        }
    }
}

/// One hyperfine level `|F, M>` with its manifold energy offset in units of
/// the splitting `omega_c`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Level {
    pub f: HalfInt,
    pub m: HalfInt,
    /// Manifold shift as a multiple of `omega_c`.
    pub energy_offset_factor: f64,
}

impl Level {
    pub fn label(&self) -> String {
        format!("F={},M={}", self.f, self.m)
    }
}

/// One `|S m_s>|I m_i>` component of a hyperfine state.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ProductAmplitude {
    /// Electron projection, +-1/2.
    pub ms: HalfInt,
    /// Nuclear projection.
    pub mi: HalfInt,
    pub coeff: Surd,
}

/// Transverse-field polarization of the drive.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Polarization {
    LeftCircular,
    RightCircular,
    LinearX,
}

/// Which atom the model describes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AtomKind {
    Hydrogen,
    Rubidium87,
}

impl AtomKind {
    pub fn nuclear_spin(self) -> HalfInt {
        match self {
            AtomKind::Hydrogen => HalfInt::from_halves(1),
            AtomKind::Rubidium87 => HalfInt::from_halves(3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Hydrogen => "H",
            AtomKind::Rubidium87 => "Rb",
        }
    }
}

/// Order in which the electron and nuclear spins are coupled; fixes the
/// Clebsch–Gordan phase of the lower (`F = I - 1/2`) manifold. The hydrogen
/// table uses spin-first phases, the Rb table nuclear-first.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CouplingOrder {
    SpinFirst,
    NuclearFirst,
}

#[derive(Debug, Error)]
pub enum MultilevelError {
    #[error("invalid quantum numbers: {0}")]
    BadQuantumNumbers(String),
    #[error("initial amplitudes must have unit norm (got {0})")]
    NotNormalized(f64),
    #[error("level |F={0},M={1}> not in this model")]
    NoSuchLevel(HalfInt, HalfInt),
    #[error("step size must be positive")]
    BadStep,
    #[error("invalid span: t1 must exceed t0")]
    BadSpan,
}

/// Decompose the `F = I +- 1/2` manifolds of an electron spin 1/2 coupled
/// to nuclear spin `i` over the product basis `|S m_s>|I m_i>`.
///
/// Returns `(F, M, components)` tuples, lower manifold first, M ascending
/// within each manifold. Coefficients are exact surds.
pub fn clebsch_compose(
    i: HalfInt,
    order: CouplingOrder,
) -> Result<Vec<(HalfInt, HalfInt, Vec<ProductAmplitude>)>, MultilevelError> {
    let i2 = i.halves();
    if i2 < 1 {
        return Err(MultilevelError::BadQuantumNumbers(format!(
            "nuclear spin {i} must be >= 1/2"
        )));
    }
    let denom = 2 * (i2 as u64 + 1); // 2(2I+1)
    let mut out = Vec::new();
    // manifolds: F2 = i2 - 1 (lower, absent when i2 = 0), then i2 + 1
    for (f2, lower) in [(i2 - 1, true), (i2 + 1, false)] {
        if f2 < 0 {
            continue;
        }
        let mut m2 = -f2;
        while m2 <= f2 {
            // c_plus on |ms=+1/2, mi=M-1/2>, c_minus on |ms=-1/2, mi=M+1/2>
            // upper: c_plus = sqrt((I+1/2+M)/(2I+1)), c_minus = sqrt((I+1/2-M)/(2I+1))
            // lower: c_plus = -sqrt((I+1/2-M)/(2I+1)), c_minus = sqrt((I+1/2+M)/(2I+1))
            let plus_num = (i2 + 1 + m2) as i64;
            let minus_num = (i2 + 1 - m2) as i64;
            let (cp, cm) = if lower {
                let flip = match order {
                    CouplingOrder::SpinFirst => 1,
                    CouplingOrder::NuclearFirst => -1,
                };
                (
                    Surd::sqrt_ratio(-minus_num * flip, denom),
                    Surd::sqrt_ratio(plus_num * flip, denom),
                )
            } else {
                (
                    Surd::sqrt_ratio(plus_num, denom),
                    Surd::sqrt_ratio(minus_num, denom),
                )
            };
            let mut comps = Vec::new();
            let mi_plus = m2 - 1; // twice (M - 1/2)
            let mi_minus = m2 + 1;
            if !cp.is_zero() && mi_plus.abs() <= i2 {
                comps.push(ProductAmplitude {
                    ms: HalfInt::from_halves(1),
                    mi: HalfInt::from_halves(mi_plus),
                    coeff: cp,
                });
            }
            if !cm.is_zero() && mi_minus.abs() <= i2 {
                comps.push(ProductAmplitude {
                    ms: HalfInt::from_halves(-1),
                    mi: HalfInt::from_halves(mi_minus),
                    coeff: cm,
                });
            }
            out.push((HalfInt::from_halves(f2), HalfInt::from_halves(m2), comps));
            m2 += 2;
        }
    }
    Ok(out)
}

/// Hyperfine level basis with exact raising/lowering transition-moment
/// tables in units of `mu_S`.
#[derive(Clone, Debug)]
pub struct AtomModel {
    pub kind: AtomKind,
    /// Levels in the fixed simulation order (see [`build_mu_plus`]).
    pub levels: Vec<Level>,
    /// `mu_plus[i][j] = <i| mu_+ |j>` in mu_S units; nonzero only for
    /// `M_i = M_j + 1`.
    pub mu_plus: Vec<Vec<Surd>>,
    /// Exact adjoint of `mu_plus`.
    pub mu_minus: Vec<Vec<Surd>>,
    /// Product-basis expansion of each level, same order as `levels`.
    pub basis_decomposition: Vec<Vec<ProductAmplitude>>,
    /// Manifold splitting, rad/s; scales every `energy_offset_factor`.
    pub omega_c: f64,
}

impl AtomModel {
    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn with_omega_c(mut self, omega_c: f64) -> Self {
        self.omega_c = omega_c;
        self
    }

    pub fn level_index(&self, f: HalfInt, m: HalfInt) -> Result<usize, MultilevelError> {
        self.levels
            .iter()
            .position(|l| l.f == f && l.m == m)
            .ok_or(MultilevelError::NoSuchLevel(f, m))
    }

    /// Unit amplitude vector concentrated on `|F, M>`.
    pub fn basis_state(&self, f: HalfInt, m: HalfInt) -> Result<StateVector, MultilevelError> {
        let idx = self.level_index(f, m)?;
        let mut v = StateVector::zeros(self.dim());
        v[idx] = C64::from(1.0);
        Ok(v)
    }

    /// `mu_plus` as a complex matrix.
    pub fn mu_plus_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = C64::from(self.mu_plus[i][j].to_f64());
            }
        }
        m
    }
}

/// Build the hyperfine model for H or ⁸⁷Rb.
///
/// The electron-only magnetic moment is used (`<S,1/2|mu_+-|S,-1/2> = mu_S`,
/// nuclear moment neglected). Level order is `(1,-1),(1,0),(1,1),(0,0)` for
/// H and `(1,-1),(1,0),(1,1),(2,-2)..(2,2)` for Rb; manifold offsets are
/// `-omega_c` for H's `F = 0` and `+omega_c` for Rb's `F = 2`, both relative
/// to `F = 1`.
pub fn build_mu_plus(kind: AtomKind) -> AtomModel {
    let order = match kind {
        AtomKind::Hydrogen => CouplingOrder::SpinFirst,
        AtomKind::Rubidium87 => CouplingOrder::NuclearFirst,
    };
    let decomp =
        clebsch_compose(kind.nuclear_spin(), order).expect("valid nuclear spin by construction");

    // fixed simulation order with manifold offsets
    let layout: Vec<(i32, i32, f64)> = match kind {
        AtomKind::Hydrogen => vec![(2, -2, 0.0), (2, 0, 0.0), (2, 2, 0.0), (0, 0, -1.0)],
        AtomKind::Rubidium87 => vec![
            (2, -2, 0.0),
            (2, 0, 0.0),
            (2, 2, 0.0),
            (4, -4, 1.0),
            (4, -2, 1.0),
            (4, 0, 1.0),
            (4, 2, 1.0),
            (4, 4, 1.0),
        ],
    };

    let mut levels = Vec::new();
    let mut basis_decomposition = Vec::new();
    for &(f2, m2, offset) in &layout {
        let (f, m) = (HalfInt::from_halves(f2), HalfInt::from_halves(m2));
        let comps = decomp
            .iter()
            .find(|(df, dm, _)| *df == f && *dm == m)
            .map(|(_, _, c)| c.clone())
            .expect("layout levels exist in the decomposition");
        levels.push(Level {
            f,
            m,
            energy_offset_factor: offset,
        });
        basis_decomposition.push(comps);
    }

    let n = levels.len();
    let mut mu_plus = vec![vec![Surd::ZERO; n]; n];
    for i in 0..n {
        for j in 0..n {
            // mu_+ = mu_S |+><-| on the electron: one product term survives
            if levels[i].m.halves() != levels[j].m.halves() + 2 {
                continue;
            }
            let mut elem = Surd::ZERO;
            for bra in &basis_decomposition[i] {
                if bra.ms.halves() != 1 {
                    continue;
                }
                for ket in &basis_decomposition[j] {
                    if ket.ms.halves() == -1 && ket.mi == bra.mi {
                        elem = bra.coeff.mul(&ket.coeff);
                    }
                }
            }
            mu_plus[i][j] = elem;
        }
    }
    let mut mu_minus = vec![vec![Surd::ZERO; n]; n];
    for i in 0..n {
        for j in 0..n {
            mu_minus[i][j] = mu_plus[j][i];
        }
    }

    AtomModel {
        kind,
        levels,
        mu_plus,
        mu_minus,
        basis_decomposition,
        omega_c: 0.0,
    }
}

/// Zeeman splitting `omega_c = 2 mu_B B_z / hbar` of the spin-1/2 levels.
pub fn zeeman_frequency(b_z: f64) -> f64 {
    zeeman_frequency_with_g(b_z, G_S)
}

/// Same with an explicit g-factor: `omega_c = g mu_B B_z / hbar`.
pub fn zeeman_frequency_with_g(b_z: f64, g: f64) -> f64 {
    g * MU_BOHR * b_z / HBAR
}

/// Interaction matrix `V(t)/hbar` (rad/s) of a spin 1/2 driven by a
/// transverse field of amplitude `b_s` (tesla) at frequency `nu`, in the
/// rotating frame of the longitudinal splitting `omega_c`.
///
/// Left-circular polarization keeps only `e^{-+i(nu - omega_c)t}` on the
/// off-diagonals; right-circular the `(nu + omega_c)` pair; linear-x drives
/// both exponential pairs at full amplitude. Diagonal entries are zero.
pub fn spin_half_coupling(
    pol: Polarization,
    t: f64,
    nu: f64,
    omega_c: f64,
    b_s: f64,
) -> CMatrix {
    let omega_0 = MU_BOHR * b_s / HBAR;
    let slow = C64::i() * (nu - omega_c) * t; // exponent of the co-rotating pair
    let fast = C64::i() * (nu + omega_c) * t;
    let mut m = CMatrix::zeros(2, 2);
    let (up, dn) = match pol {
        Polarization::LeftCircular => ((-slow).exp(), slow.exp()),
        Polarization::RightCircular => ((-fast).exp(), fast.exp()),
        Polarization::LinearX => ((-slow).exp() + fast.exp(), slow.exp() + (-fast).exp()),
    };
    m[(0, 1)] = -omega_0 * up;
    m[(1, 0)] = -omega_0 * dn;
    m
}

/// Time-dependent coupling matrix of the interaction-picture amplitude
/// equations under the circular drive: entry `(i, j)` is
///
/// ```text
/// mu_plus[i][j]  e^{-i (nu + w_ji) t} + mu_minus[i][j] e^{+i (nu - w_ji) t}
/// ```
///
/// with `w_ji = (offset_j - offset_i) omega_c`. Hermitian at every `t`; at
/// `t = 0` all phases collapse to 1 and the matrix is real symmetric.
pub fn build_l_matrix(model: &AtomModel, t: f64, nu: f64, omega_c: f64) -> CMatrix {
    let n = model.dim();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let w_ji =
                (model.levels[j].energy_offset_factor - model.levels[i].energy_offset_factor)
                    * omega_c;
            let mut acc = C64::from(0.0);
            let p = &model.mu_plus[i][j];
            if !p.is_zero() {
                acc += p.to_f64() * (-C64::i() * (nu + w_ji) * t).exp();
            }
            let q = &model.mu_minus[i][j];
            if !q.is_zero() {
                acc += q.to_f64() * (C64::i() * (nu - w_ji) * t).exp();
            }
            m[(i, j)] = acc;
        }
    }
    m
}

/// Drive applied to an atom model.
#[derive(Copy, Clone, Debug)]
pub struct AtomDrive {
    /// Transverse field amplitude, tesla.
    pub b_s: f64,
    /// Drive frequency, rad/s.
    pub nu: f64,
}

impl AtomDrive {
    /// `Omega_0 = mu_B B_s / hbar`.
    pub fn omega_0(&self) -> f64 {
        MU_BOHR * self.b_s / HBAR
    }
}

/// Propagate `i da/dt = M(t) a` with the unitary Cayley midpoint map.
fn propagate_unitary<F>(
    generator: F,
    y0: &StateVector,
    t_span: (f64, f64),
    dt: f64,
    sample_every: f64,
    unit: TimeUnit,
) -> Result<Solution, MultilevelError>
where
    F: Fn(f64) -> CMatrix,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MultilevelError::BadStep);
    }
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(MultilevelError::BadSpan);
    }
    let n = y0.len();
    let sample_every = if sample_every > 0.0 {
        sample_every
    } else {
        t1 - t0
    };
    let mut sampler = Sampler::new(t0, y0, sample_every, t1);
    let mut stats = StepStats::default();
    let mut y = y0.clone();
    let mut t = t0;
    while t < t1 - 1e-14 * (t1 - t0) {
        let h = dt.min(t1 - t);
        let m = generator(t + 0.5 * h);
        // (I + i h M / 2) y+ = (I - i h M / 2) y
        let half = C64::i() * (0.5 * h);
        let mut lhs = CMatrix::identity(n);
        let mut rhs_v = y.clone();
        let my = m.mul_vec(&y);
        for i in 0..n {
            for j in 0..n {
                lhs[(i, j)] += half * m[(i, j)];
            }
            rhs_v[i] -= half * my[i];
        }
        let y_new = lhs.solve(&rhs_v);
        let t_new = t + h;
        stats.accepted += 1;
        stats.rhs_evals += 1;
        sampler.advance(t, &y, t_new, &y_new);
        y = y_new;
        t = t_new;
    }
    Ok(Solution {
        trajectory: sampler.finish(t1, &y, unit),
        stats,
    })
}

/// Integrate `i da/dt = Omega_0 L(t) a` for the model under a circular
/// drive; amplitudes keep unit norm to rounding.
///
/// `dt` defaults to 1/40 of the fastest phase period in the system.
pub fn simulate_atom(
    model: &AtomModel,
    drive: AtomDrive,
    y0: &StateVector,
    t_span: (f64, f64),
    dt: Option<f64>,
    sample_every: f64,
) -> Result<Solution, MultilevelError> {
    let norm = y0.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(MultilevelError::NotNormalized(norm));
    }
    if y0.len() != model.dim() {
        return Err(MultilevelError::BadQuantumNumbers(format!(
            "state has {} amplitudes, model has {} levels",
            y0.len(),
            model.dim()
        )));
    }
    let omega_0 = drive.omega_0();
    let omega_c = model.omega_c;
    let fastest = (drive.nu + omega_c.abs())
        .abs()
        .max(drive.nu.abs())
        .max(4.0 * omega_0)
        .max(f64::MIN_POSITIVE);
    let dt = dt.unwrap_or(std::f64::consts::TAU / fastest / 40.0);
    let gen = move |t: f64| {
        let mut m = build_l_matrix(model, t, drive.nu, omega_c);
        for i in 0..model.dim() {
            for j in 0..model.dim() {
                m[(i, j)] *= omega_0;
            }
        }
        m
    };
    propagate_unitary(gen, y0, t_span, dt, sample_every, TimeUnit::Seconds)
}

/// Integrate the driven spin-1/2 amplitudes `i dc/dt = V(t)/hbar c` for the
/// chosen polarization, starting from `y0 = (c_up, c_down)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_spin_half(
    pol: Polarization,
    b_s: f64,
    nu: f64,
    omega_c: f64,
    y0: &StateVector,
    t_span: (f64, f64),
    dt: Option<f64>,
    sample_every: f64,
) -> Result<Solution, MultilevelError> {
    let norm = y0.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(MultilevelError::NotNormalized(norm));
    }
    let omega_0 = MU_BOHR * b_s / HBAR;
    let fastest = (nu + omega_c.abs()).max(4.0 * omega_0).max(f64::MIN_POSITIVE);
    let dt = dt.unwrap_or(std::f64::consts::TAU / fastest / 40.0);
    propagate_unitary(
        |t| spin_half_coupling(pol, t, nu, omega_c, b_s),
        y0,
        t_span,
        dt,
        sample_every,
        TimeUnit::Seconds,
    )
}

/// Deviation report of the rotating-wave approximation for a spin 1/2.
#[derive(Copy, Clone, Debug)]
pub struct RwaReport {
    /// Max over time of |population(full linear) - population(RWA)|.
    pub max_population_deviation: f64,
    pub omega_0: f64,
    pub omega_c: f64,
}

/// Integrate the spin-1/2 dynamics once with the co-rotating (LCP) coupling
/// and once with the full linear-x coupling, from spin-down, and report the
/// maximum population deviation over `t_span`.
///
/// Both couplings carry the full amplitude `-mu_B B_s` per exponential, so
/// the co-rotating parts agree exactly and the deviation isolates the
/// counter-rotating term; it scales as `O(Omega_0 / omega_c)`.
pub fn rwa_validation(
    b_s: f64,
    nu: f64,
    omega_c: f64,
    t_span: (f64, f64),
) -> Result<RwaReport, MultilevelError> {
    let omega_0 = MU_BOHR * b_s / HBAR;
    if omega_0 == 0.0 {
        return Ok(RwaReport {
            max_population_deviation: 0.0,
            omega_0,
            omega_c,
        });
    }
    let dt = std::f64::consts::TAU / (nu + omega_c.abs()).max(4.0 * omega_0) / 40.0;
    let y0 = StateVector::new(vec![C64::from(0.0), C64::from(1.0)]);
    let sample = dt * 4.0;
    let rwa = propagate_unitary(
        |t| spin_half_coupling(Polarization::LeftCircular, t, nu, omega_c, b_s),
        &y0,
        t_span,
        dt,
        sample,
        TimeUnit::Seconds,
    )?;
    let full = propagate_unitary(
        |t| spin_half_coupling(Polarization::LinearX, t, nu, omega_c, b_s),
        &y0,
        t_span,
        dt,
        sample,
        TimeUnit::Seconds,
    )?;
    let dev = rwa
        .trajectory
        .states()
        .iter()
        .zip(full.trajectory.states())
        .map(|(a, b)| (a[0].norm_sqr() - b[0].norm_sqr()).abs())
        .fold(0.0f64, f64::max);
    Ok(RwaReport {
        max_population_deviation: dev,
        omega_0,
        omega_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surd_eq(s: &Surd, num: i64, den: u64, rad: u64) -> bool {
        // value == sign(num) * |num| * sqrt(rad) / den  compared canonically
        let want = Surd::canonical(if num >= 0 { 1 } else { -1 }, num.unsigned_abs(), rad, den);
        *s == want
    }

    #[test]
    fn surd_canonicalization_and_display() {
        assert_eq!(Surd::sqrt_ratio(3, 4).to_string(), "sqrt(3)/2");
        assert_eq!(Surd::sqrt_ratio(-3, 4).to_string(), "-sqrt(3)/2");
        assert_eq!(Surd::sqrt_ratio(1, 2).to_string(), "sqrt(2)/2");
        assert_eq!(Surd::sqrt_ratio(1, 4).to_string(), "1/2");
        assert_eq!(Surd::sqrt_ratio(6, 16).to_string(), "sqrt(6)/4");
        assert_eq!(Surd::ZERO.to_string(), "0");
        assert_eq!(Surd::sqrt_ratio(4, 1).to_string(), "2");
        // product: sqrt(3)/2 * 1/sqrt(2) = sqrt(6)/4
        let p = Surd::sqrt_ratio(3, 4).mul(&Surd::sqrt_ratio(1, 2));
        assert_eq!(p.to_string(), "sqrt(6)/4");
        assert!((p.to_f64() - 6.0f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn hydrogen_singlet_line() {
        // |F=0,M=0> = (1/sqrt2)|-,+1/2> - (1/sqrt2)|+,-1/2>
        let d = clebsch_compose(HalfInt::from_halves(1), CouplingOrder::SpinFirst).unwrap();
        let (_, _, comps) = d
            .iter()
            .find(|(f, m, _)| f.halves() == 0 && m.halves() == 0)
            .unwrap();
        let up = comps.iter().find(|c| c.ms.halves() == 1).unwrap();
        let dn = comps.iter().find(|c| c.ms.halves() == -1).unwrap();
        assert!(surd_eq(&up.coeff, -1, 2, 2)); // -sqrt(2)/2
        assert!(surd_eq(&dn.coeff, 1, 2, 2));
        assert_eq!(up.mi.halves(), -1);
        assert_eq!(dn.mi.halves(), 1);
    }

    #[test]
    fn rb_first_line() {
        // |F=1,M=-1> = -(1/2)|-,-1/2> + (sqrt3/2)|+,-3/2>
        let d = clebsch_compose(HalfInt::from_halves(3), CouplingOrder::NuclearFirst).unwrap();
        let (_, _, comps) = d
            .iter()
            .find(|(f, m, _)| f.halves() == 2 && m.halves() == -2)
            .unwrap();
        let up = comps.iter().find(|c| c.ms.halves() == 1).unwrap();
        let dn = comps.iter().find(|c| c.ms.halves() == -1).unwrap();
        assert!(surd_eq(&up.coeff, 1, 2, 3));
        assert_eq!(up.mi.halves(), -3);
        assert!(surd_eq(&dn.coeff, -1, 2, 1));
        assert_eq!(dn.mi.halves(), -1);
    }

    #[test]
    fn decompositions_orthonormal() {
        for (i, order) in [
            (HalfInt::from_halves(1), CouplingOrder::SpinFirst),
            (HalfInt::from_halves(3), CouplingOrder::NuclearFirst),
            (HalfInt::from_halves(5), CouplingOrder::SpinFirst),
        ] {
            let d = clebsch_compose(i, order).unwrap();
            for (a, (_, _, ca)) in d.iter().enumerate() {
                for (b, (_, _, cb)) in d.iter().enumerate() {
                    let mut dot = 0.0;
                    for x in ca {
                        for y in cb {
                            if x.ms == y.ms && x.mi == y.mi {
                                dot += x.coeff.to_f64() * y.coeff.to_f64();
                            }
                        }
                    }
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn hydrogen_golden_elements() {
        let model = build_mu_plus(AtomKind::Hydrogen);
        let idx = |f: i32, m: i32| {
            model
                .level_index(HalfInt::from_halves(f), HalfInt::from_halves(m))
                .unwrap()
        };
        // <1,1|mu+|1,0> = mu_S/sqrt2
        assert_eq!(model.mu_plus[idx(2, 2)][idx(2, 0)].to_string(), "sqrt(2)/2");
        // <1,0|mu+|1,-1> = mu_S/sqrt2
        assert_eq!(model.mu_plus[idx(2, 0)][idx(2, -2)].to_string(), "sqrt(2)/2");
        // -<0,0|mu+|1,-1> = <0,0|mu-|1,1> = mu_S/sqrt2
        let a = model.mu_plus[idx(0, 0)][idx(2, -2)];
        let b = model.mu_minus[idx(0, 0)][idx(2, 2)];
        assert_eq!(a.neg(), b);
        assert_eq!(b.to_string(), "sqrt(2)/2");
        // <1,0|mu+|1,-1> = <1,0|mu-|1,1>
        assert_eq!(
            model.mu_plus[idx(2, 0)][idx(2, -2)],
            model.mu_minus[idx(2, 0)][idx(2, 2)]
        );
        // exactly 4 nonzero raising elements
        let nonzero: usize = model
            .mu_plus
            .iter()
            .flatten()
            .filter(|s| !s.is_zero())
            .count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn rb_golden_elements() {
        let model = build_mu_plus(AtomKind::Rubidium87);
        let idx = |f: i32, m: i32| {
            model
                .level_index(HalfInt::from_int(f), HalfInt::from_int(m))
                .unwrap()
        };
        let elem = |fi, mi, fj, mj| model.mu_plus[idx(fi, mi)][idx(fj, mj)].to_string();
        assert_eq!(elem(2, 2, 2, 1), "1/2");
        assert_eq!(elem(2, 2, 1, 1), "-sqrt(3)/2");
        assert_eq!(elem(2, 1, 2, 0), "sqrt(6)/4");
        assert_eq!(elem(2, 1, 1, 0), "-sqrt(6)/4");
        assert_eq!(elem(2, 0, 2, -1), "sqrt(6)/4");
        assert_eq!(elem(2, 0, 1, -1), "-sqrt(2)/4");
        assert_eq!(elem(2, -1, 2, -2), "1/2");
        assert_eq!(elem(1, 1, 1, 0), "-sqrt(2)/4");
        assert_eq!(elem(1, 0, 1, -1), "-sqrt(2)/4");
        assert_eq!(elem(1, 1, 2, 0), "sqrt(2)/4");
        assert_eq!(elem(1, 0, 2, -1), "sqrt(6)/4");
        assert_eq!(elem(1, -1, 2, -2), "sqrt(3)/2");
    }

    #[test]
    fn adjointness_and_selection_rules() {
        for kind in [AtomKind::Hydrogen, AtomKind::Rubidium87] {
            let model = build_mu_plus(kind);
            let n = model.dim();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(model.mu_minus[i][j], model.mu_plus[j][i]);
                    if model.levels[i].m.halves() != model.levels[j].m.halves() + 2 {
                        assert!(model.mu_plus[i][j].is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn l_matrix_hermitian_and_symmetric_at_zero() {
        for kind in [AtomKind::Hydrogen, AtomKind::Rubidium87] {
            let model = build_mu_plus(kind);
            for &(t, nu, wc) in &[(0.3, 1.7, 5.0), (2.1, 0.4, 11.0), (7.9, 3.3, 0.7)] {
                let l = build_l_matrix(&model, t, nu, wc);
                assert!(l.hermiticity_defect() < 1e-12);
            }
            // at t = 0 every phase is 1: real symmetric coefficient matrix
            let l0 = build_l_matrix(&model, 0.0, 1.3, 4.2);
            for i in 0..model.dim() {
                for j in 0..model.dim() {
                    assert!(l0[(i, j)].im.abs() < 1e-15);
                    assert!((l0[(i, j)] - l0[(j, i)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rb_l_matrix_column_four() {
        // column of a(2,-2) at t = 0: sqrt(3)/2 into (1,-1), 1/2 into (2,-1)
        let model = build_mu_plus(AtomKind::Rubidium87);
        let l = build_l_matrix(&model, 0.0, 1.0, 3.0);
        let col = 3;
        let expect = [
            3.0f64.sqrt() / 2.0,
            0.0,
            0.0,
            0.0,
            0.5,
            0.0,
            0.0,
            0.0,
        ];
        for (i, want) in expect.iter().enumerate() {
            assert!(
                (l[(i, col)].re - want).abs() < 1e-15,
                "row {i}: {} vs {want}",
                l[(i, col)].re
            );
        }
        // applying the matrix to the unit basis vector e4 reads the column
        let mut e4 = StateVector::zeros(8);
        e4[col] = C64::from(1.0);
        let out = crate::numerics::mat_vec(&l, &e4);
        for i in 0..8 {
            assert!((out[i] - l[(i, col)]).norm() < 1e-15);
        }
    }

    #[test]
    fn h_resonant_slot_is_slow() {
        // the (0,0) <-> (1,1) coupling carries the (nu - omega_c) phase:
        // time-independent at nu = omega_c
        let model = build_mu_plus(AtomKind::Hydrogen);
        let i11 = model
            .level_index(HalfInt::from_halves(2), HalfInt::from_halves(2))
            .unwrap();
        let i00 = model
            .level_index(HalfInt::from_halves(0), HalfInt::from_halves(0))
            .unwrap();
        let wc = 37.0;
        let a = build_l_matrix(&model, 0.0, wc, wc)[(i11, i00)];
        let b = build_l_matrix(&model, 5.1, wc, wc)[(i11, i00)];
        assert!((a - b).norm() < 1e-12);
        assert!((a.re - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spin_half_coupling_table() {
        let b_s = 1e-7;
        let omega_0 = MU_BOHR * b_s / HBAR;
        // LCP at nu = omega_c: constant off-diagonal -mu_B B_s
        let m = spin_half_coupling(Polarization::LeftCircular, 1.23, 5.0, 5.0, b_s);
        assert!((m[(0, 1)] - C64::from(-omega_0)).norm() < 1e-18 * omega_0.abs().max(1.0));
        // linear at t = 0: both terms coincide, off-diagonal -2 mu_B B_s
        let m = spin_half_coupling(Polarization::LinearX, 0.0, 5.0, 3.0, b_s);
        assert!((m[(0, 1)] - C64::from(-2.0 * omega_0)).norm() < 1e-15 * omega_0);
        // RCP upper element: -mu_B B_s e^{-i(nu+omega_c)t}
        let (nu, wc, t) = (2.0, 3.0, 0.7);
        let m = spin_half_coupling(Polarization::RightCircular, t, nu, wc, b_s);
        let want = -omega_0 * (-C64::i() * (nu + wc) * t).exp();
        assert!((m[(0, 1)] - want).norm() < 1e-15 * omega_0);
        // Hermitian for all polarizations
        for pol in [
            Polarization::LeftCircular,
            Polarization::RightCircular,
            Polarization::LinearX,
        ] {
            assert!(spin_half_coupling(pol, 0.9, 2.0, 3.0, b_s).hermiticity_defect() < 1e-18);
        }
    }

    #[test]
    fn zeeman_values() {
        assert_eq!(zeeman_frequency(0.0), 0.0);
        // 500 G = 0.05 T -> ~8.794e9 rad/s
        let w = zeeman_frequency(0.05);
        assert!((w - 8.794e9).abs() / 8.794e9 < 1e-3, "got {w}");
        // linearity
        assert!((zeeman_frequency(1.0) - 2.0 * zeeman_frequency(0.5)).abs() < 1e-6);
    }

    #[test]
    fn zero_drive_keeps_amplitudes() {
        let model = build_mu_plus(AtomKind::Hydrogen).with_omega_c(10.0);
        let y0 = model
            .basis_state(HalfInt::from_halves(0), HalfInt::from_halves(0))
            .unwrap();
        let sol = simulate_atom(
            &model,
            AtomDrive { b_s: 0.0, nu: 10.0 },
            &y0,
            (0.0, 5.0),
            Some(0.01),
            0.5,
        )
        .unwrap();
        for s in sol.trajectory.states() {
            assert!((s[3].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn h_resonant_rabi_matches_two_level_formula() {
        // pump (0,0), drive at nu = omega_c = 50 Omega_0: transfer to (1,1)
        // with the mu_S/sqrt2 element; others detuned by >= 50 Omega_0
        let b_s = 1.0; // tesla; scale drops out after omega_0 normalization
        let omega_0 = MU_BOHR * b_s / HBAR;
        let wc = 50.0 * omega_0;
        let model = build_mu_plus(AtomKind::Hydrogen).with_omega_c(wc);
        let y0 = model
            .basis_state(HalfInt::from_halves(0), HalfInt::from_halves(0))
            .unwrap();
        let g = omega_0 / 2.0f64.sqrt();
        let t_end = std::f64::consts::PI / g; // one full population cycle
        let sol = simulate_atom(
            &model,
            AtomDrive { b_s, nu: wc },
            &y0,
            (0.0, t_end),
            None,
            t_end / 400.0,
        )
        .unwrap();
        let i11 = model
            .level_index(HalfInt::from_halves(2), HalfInt::from_halves(2))
            .unwrap();
        let mut max_spectators = 0.0f64;
        for (t, s) in sol.trajectory.times().iter().zip(sol.trajectory.states()) {
            let p11 = s[i11].norm_sqr();
            let expect = (g * t).sin().powi(2);
            assert!(
                (p11 - expect).abs() < 0.05,
                "t={t}: p={p11} expect={expect}"
            );
            for (k, z) in s.values().iter().enumerate() {
                if k != i11 && k != 3 {
                    max_spectators = max_spectators.max(z.norm_sqr());
                }
            }
        }
        assert!(max_spectators < 0.05);
        // norm behavior of the unitary stepper
        let (_, end) = sol.trajectory.last();
        assert!((end.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rb_pumped_state_transfers_through_strongest_elements() {
        // population in (1,1): resonant transfer to (2,2) (element -sqrt3/2),
        // second hop to (2,1) (element 1/2) stays weak off-resonance
        let b_s = 1.0;
        let omega_0 = MU_BOHR * b_s / HBAR;
        let wc = 50.0 * omega_0;
        let model = build_mu_plus(AtomKind::Rubidium87).with_omega_c(wc);
        let y0 = model.basis_state(HalfInt::from_int(1), HalfInt::from_int(1)).unwrap();
        let g = omega_0 * 3.0f64.sqrt() / 2.0;
        let t_end = std::f64::consts::PI / g;
        let sol = simulate_atom(
            &model,
            AtomDrive { b_s, nu: wc },
            &y0,
            (0.0, t_end),
            None,
            t_end / 200.0,
        )
        .unwrap();
        let i22 = model.level_index(HalfInt::from_int(2), HalfInt::from_int(2)).unwrap();
        let max_p22 = sol
            .trajectory
            .states()
            .iter()
            .map(|s| s[i22].norm_sqr())
            .fold(0.0f64, f64::max);
        assert!(max_p22 > 0.95, "max transfer {max_p22}");
        // short-time perturbative growth dominated by the largest element
        let early = sol.trajectory.sample(t_end / 50.0);
        let p22 = early[i22].norm_sqr();
        for (k, z) in early.values().iter().enumerate() {
            if k != i22 && k != 2 {
                assert!(z.norm_sqr() < p22, "level {k} beats the resonant path");
            }
        }
    }

    #[test]
    fn rwa_deviation_zero_without_drive() {
        let r = rwa_validation(0.0, 100.0, 100.0, (0.0, 10.0)).unwrap();
        assert_eq!(r.max_population_deviation, 0.0);
    }

    #[test]
    fn rwa_deviation_scales_inversely_with_splitting() {
        let b_s = 1.0;
        let omega_0 = MU_BOHR * b_s / HBAR;
        let t_end = 5.0 * std::f64::consts::PI / omega_0; // 5 Rabi periods
        let dev100 = rwa_validation(b_s, 100.0 * omega_0, 100.0 * omega_0, (0.0, t_end))
            .unwrap()
            .max_population_deviation;
        let dev1000 = rwa_validation(b_s, 1000.0 * omega_0, 1000.0 * omega_0, (0.0, t_end))
            .unwrap()
            .max_population_deviation;
        assert!(dev100 < 0.05, "dev100 {dev100}");
        assert!(dev1000 <= dev100 / 5.0, "{dev1000} vs {dev100}");
    }
}
