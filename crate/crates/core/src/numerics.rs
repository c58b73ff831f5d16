//! Explicit ODE integration over complex state vectors, plus small
//! complex-matrix utilities.
//!
//! Two stepping modes are provided through one entry point, [`integrate`]:
//! an embedded Dormand–Prince 5(4) pair with PI step control (default), and
//! a classical fixed-step 4th-order Runge–Kutta mode for determinism and
//! long-horizon conservation runs. Dense output is linear interpolation
//! between accepted steps; sampling never influences step selection.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

/// Ordered sequence of complex scalars evolved by [`integrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    values: Vec<C64>,
}

impl StateVector {
    pub fn new(values: Vec<C64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_reals(reals: &[f64]) -> Self {
        Self {
            values: reals.iter().map(|&r| C64::new(r, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// Euclidean norm over all complex components.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn fill_zero(&mut self) {
        for z in &mut self.values {
            *z = C64::new(0.0, 0.0);
        }
    }

    /// self += c * other
    fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        Self {
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| x * (1.0 - w) + y * w)
                .collect(),
        }
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.values[i]
    }
}

impl From<Vec<C64>> for StateVector {
    fn from(values: Vec<C64>) -> Self {
        Self { values }
    }
}

/// Unit carried by [`Trajectory::times`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TimeUnit {
    /// Dimensionless time, tau = Omega_a * t.
    DimensionlessTau,
    Seconds,
}

/// Sampled solution of an integration run: strictly increasing times and the
/// state at each time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    time_unit: TimeUnit,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("times must be strictly increasing (violation at index {0})")]
    NonMonotonic(usize),
    #[error("times and states have different lengths ({times} vs {states})")]
    LengthMismatch { times: usize, states: usize },
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<StateVector>,
        time_unit: TimeUnit,
    ) -> Result<Self, TrajectoryError> {
        if times.len() != states.len() {
            return Err(TrajectoryError::LengthMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        if times.len() < 2 {
            return Err(TrajectoryError::TooShort(times.len()));
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(TrajectoryError::NonMonotonic(i));
            }
        }
        Ok(Self {
            times,
            states,
            time_unit,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn time_unit(&self) -> TimeUnit {
        self.time_unit
    }

    pub fn first(&self) -> (&f64, &StateVector) {
        (&self.times[0], &self.states[0])
    }

    pub fn last(&self) -> (&f64, &StateVector) {
        (
            self.times.last().unwrap(),
            self.states.last().unwrap(),
        )
    }

    /// Linear interpolation of the state at time `t` (clamped to the span).
    pub fn sample(&self, t: f64) -> StateVector {
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= *self.times.last().unwrap() {
            return self.states.last().unwrap().clone();
        }
        let i = match self.times.partition_point(|&x| x <= t) {
            0 => 1,
            k => k,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        StateVector::lerp(&self.states[i - 1], &self.states[i], w)
    }

    /// Scale all times and every state component in place.
    pub(crate) fn rescale(&mut self, time_factor: f64, state_factors: &[f64], unit: TimeUnit) {
        for t in &mut self.times {
            *t *= time_factor;
        }
        for s in &mut self.states {
            for (z, &f) in s.values_mut().iter_mut().zip(state_factors) {
                *z *= f;
            }
        }
        self.time_unit = unit;
    }
}

/// Step-size control for [`integrate`].
#[derive(Copy, Clone, Debug)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// When set, integrate with classical RK4 at exactly this step
    /// (deterministic; no error control).
    pub fixed_step: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: f64::INFINITY,
            fixed_step: None,
        }
    }
}

/// Counters accumulated during one integration run.
#[derive(Copy, Clone, Debug, Default, Serialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// A trajectory together with the integrator counters that produced it.
#[derive(Clone, Debug)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub stats: StepStats,
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid span: t1 = {t1} must exceed t0 = {t0}")]
    BadSpan { t0: f64, t1: f64 },
    #[error("tolerances and steps must be positive and finite")]
    BadControl,
    #[error("step size underflow at t = {t} (h = {h:.3e} < {h_min:.3e}); integration aborted")]
    StepSizeUnderflow {
        t: f64,
        h: f64,
        h_min: f64,
        last_state: StateVector,
    },
    #[error("non-finite right-hand side at t = {t}")]
    NonFiniteRhs { t: f64 },
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); 4th-order embedded weights:
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub(crate) struct Sampler {
    times: Vec<f64>,
    states: Vec<StateVector>,
    next: f64,
    every: f64,
    t_end: f64,
}

impl Sampler {
    pub(crate) fn new(t0: f64, y0: &StateVector, every: f64, t_end: f64) -> Self {
        Self {
            times: vec![t0],
            states: vec![y0.clone()],
            next: t0 + every,
            every,
            t_end,
        }
    }

    /// Record interpolated samples covered by the accepted step
    /// (t_prev, y_prev) -> (t_new, y_new).
    pub(crate) fn advance(&mut self, t_prev: f64, y_prev: &StateVector, t_new: f64, y_new: &StateVector) {
        let span_eps = 1e-14 * self.t_end.abs().max(1.0);
        while self.next <= t_new + span_eps && self.next < self.t_end - span_eps {
            let w = (self.next - t_prev) / (t_new - t_prev);
            let s = StateVector::lerp(y_prev, y_new, w.clamp(0.0, 1.0));
            if self.next > *self.times.last().unwrap() + span_eps {
                self.times.push(self.next);
                self.states.push(s);
            }
            self.next += self.every;
        }
    }

    pub(crate) fn finish(mut self, t_end: f64, y_end: &StateVector, unit: TimeUnit) -> Trajectory {
        let span_eps = 1e-14 * self.t_end.abs().max(1.0);
        if t_end > *self.times.last().unwrap() + span_eps {
            self.times.push(t_end);
            self.states.push(y_end.clone());
        } else {
            *self.states.last_mut().unwrap() = y_end.clone();
        }
        Trajectory::new(self.times, self.states, unit).expect("sampler builds valid trajectories")
    }
}

/// Integrate `dy/dt = rhs(t, y)` over `t_span`, sampling the solution at
/// spacing `sample_every` (both endpoints always included).
///
/// Aborts with [`IntegrateError::StepSizeUnderflow`] (carrying the last good
/// state) when error control collapses the step, and with
/// [`IntegrateError::NonFiniteRhs`] when the right-hand side returns NaN or
/// infinity.
pub fn integrate<F>(
    mut rhs: F,
    y0: &StateVector,
    t_span: (f64, f64),
    ctrl: &StepControl,
    sample_every: f64,
    time_unit: TimeUnit,
) -> Result<Solution, IntegrateError>
where
    F: FnMut(f64, &StateVector, &mut StateVector),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(IntegrateError::BadSpan { t0, t1 });
    }
    if !(ctrl.abs_tol > 0.0) || !(ctrl.rel_tol > 0.0) || !(ctrl.max_step > 0.0) {
        return Err(IntegrateError::BadControl);
    }
    if let Some(h) = ctrl.fixed_step {
        if !(h > 0.0) || !h.is_finite() {
            return Err(IntegrateError::BadControl);
        }
    }
    let sample_every = if sample_every > 0.0 {
        sample_every
    } else {
        t1 - t0
    };

    match ctrl.fixed_step {
        Some(h) => integrate_rk4(rhs, y0, t0, t1, h, sample_every, time_unit),
        None => integrate_dopri5(&mut rhs, y0, t0, t1, ctrl, sample_every, time_unit),
    }
}

fn integrate_rk4<F>(
    mut rhs: F,
    y0: &StateVector,
    t0: f64,
    t1: f64,
    h: f64,
    sample_every: f64,
    time_unit: TimeUnit,
) -> Result<Solution, IntegrateError>
where
    F: FnMut(f64, &StateVector, &mut StateVector),
{
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut sampler = Sampler::new(t0, y0, sample_every, t1);
    let mut y = y0.clone();
    let mut t = t0;
    let (mut k1, mut k2, mut k3, mut k4) = (
        StateVector::zeros(n),
        StateVector::zeros(n),
        StateVector::zeros(n),
        StateVector::zeros(n),
    );
    let mut tmp = StateVector::zeros(n);

    while t < t1 - 1e-14 * (t1 - t0).abs() {
        let step = h.min(t1 - t);
        rhs(t, &y, &mut k1);
        tmp.clone_from(&y);
        tmp.axpy(step / 2.0, &k1);
        rhs(t + step / 2.0, &tmp, &mut k2);
        tmp.clone_from(&y);
        tmp.axpy(step / 2.0, &k2);
        rhs(t + step / 2.0, &tmp, &mut k3);
        tmp.clone_from(&y);
        tmp.axpy(step, &k3);
        rhs(t + step, &tmp, &mut k4);
        stats.rhs_evals += 4;
        for stage in [&k1, &k2, &k3, &k4] {
            if !stage.all_finite() {
                return Err(IntegrateError::NonFiniteRhs { t });
            }
        }
        let t_new = t + step;
        let mut y_new = y.clone();
        y_new.axpy(step / 6.0, &k1);
        y_new.axpy(step / 3.0, &k2);
        y_new.axpy(step / 3.0, &k3);
        y_new.axpy(step / 6.0, &k4);
        stats.accepted += 1;
        sampler.advance(t, &y, t_new, &y_new);
        y = y_new;
        t = t_new;
    }
    Ok(Solution {
        trajectory: sampler.finish(t1, &y, time_unit),
        stats,
    })
}

fn integrate_dopri5<F>(
    rhs: &mut F,
    y0: &StateVector,
    t0: f64,
    t1: f64,
    ctrl: &StepControl,
    sample_every: f64,
    time_unit: TimeUnit,
) -> Result<Solution, IntegrateError>
where
    F: FnMut(f64, &StateVector, &mut StateVector),
{
    let n = y0.len();
    let span = t1 - t0;
    let mut stats = StepStats::default();
    let mut sampler = Sampler::new(t0, y0, sample_every, t1);

    let mut y = y0.clone();
    let mut t = t0;
    let mut k: Vec<StateVector> = (0..7).map(|_| StateVector::zeros(n)).collect();
    let mut tmp = StateVector::zeros(n);

    rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    if !k[0].all_finite() {
        return Err(IntegrateError::NonFiniteRhs { t });
    }

    let mut h = (span / 100.0).min(ctrl.max_step);
    let h_min_floor = 16.0 * f64::EPSILON * span.abs().max(t0.abs()).max(t1.abs());

    while t < t1 - 1e-14 * span.abs() {
        h = h.min(t1 - t).min(ctrl.max_step);
        if h < h_min_floor {
            return Err(IntegrateError::StepSizeUnderflow {
                t,
                h,
                h_min: h_min_floor,
                last_state: y,
            });
        }

        for s in 1..7 {
            tmp.clone_from(&y);
            for (j, kj) in k.iter().take(s).enumerate() {
                let a = DP_A[s - 1][j];
                if a != 0.0 {
                    tmp.axpy(h * a, kj);
                }
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + DP_C[s] * h, &tmp, &mut tail[0]);
            stats.rhs_evals += 1;
            if !tail[0].all_finite() {
                return Err(IntegrateError::NonFiniteRhs { t: t + DP_C[s] * h });
            }
        }

        // 5th-order solution is stage row 6 of A applied through k[0..6];
        // k[6] is the FSAL derivative at (t+h, y5).
        let mut y5 = y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let b = DP_A[5][j];
            if b != 0.0 {
                y5.axpy(h * b, kj);
            }
        }
        // embedded 4th-order estimate
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let b = DP_B4[j];
            if b != 0.0 {
                y4.axpy(h * b, kj);
            }
        }

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (y5[i] - y4[i]).norm();
            let scale = ctrl.abs_tol + ctrl.rel_tol * y[i].norm().max(y5[i].norm());
            let r = e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            let t_new = t + h;
            stats.accepted += 1;
            sampler.advance(t, &y, t_new, &y5);
            y = y5;
            t = t_new;
            // FSAL: derivative at the new point was not computed above; do it
            // now as k[0] for the next step.
            rhs(t, &y, &mut k[0]);
            stats.rhs_evals += 1;
            if !k[0].all_finite() {
                return Err(IntegrateError::NonFiniteRhs { t });
            }
        } else {
            stats.rejected += 1;
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }

    Ok(Solution {
        trajectory: sampler.finish(t1, &y, time_unit),
        stats,
    })
}

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            nrows,
            ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Max absolute deviation from Hermitian symmetry.
    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &StateVector) -> StateVector {
        assert_eq!(
            self.ncols,
            v.len(),
            "matrix-vector dimension mismatch: {}x{} vs {}",
            self.nrows,
            self.ncols,
            v.len()
        );
        let mut out = StateVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.ncols {
                acc += self.data[i * self.ncols + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    /// Intended for the small (n <= 8) systems that arise here.
    pub fn solve(&self, b: &StateVector) -> StateVector {
        assert_eq!(self.nrows, self.ncols, "solve needs a square matrix");
        assert_eq!(self.nrows, b.len(), "solve dimension mismatch");
        let n = self.nrows;
        let mut a = self.data.clone();
        let mut x: Vec<C64> = b.values().to_vec();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].norm();
            for r in col + 1..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            assert!(best > 0.0, "singular matrix in solve");
            if piv != col {
                for c in 0..n {
                    a.swap(col * n + c, piv * n + c);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for c in col..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= f * v;
                }
                let xc = x[col];
                x[r] -= f * xc;
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for c in col + 1..n {
                acc -= a[col * n + c] * x[c];
            }
            x[col] = acc / a[col * n + col];
        }
        StateVector::new(x)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// Exact complex matrix-vector product. Dimension mismatch is a contract
/// violation and panics.
pub fn mat_vec(m: &CMatrix, v: &StateVector) -> StateVector {
    m.mul_vec(v)
}
