//! Entrywise block coordinate descent for
//!
//! ```text
//! min_X  phi(X) = Tr(X^H A X C) - 2 Re Tr(X^H B)   s.t. every |X(i,j)| = 1
//! ```
//!
//! with `A`, `C` Hermitian PSD. Restricted to one entry, `phi` is
//! `a |x|^2 - 2 Re(b* x)` with `a = A(i,i) C(j,j)` and
//! `b = A(i,i) X(i,j) C(j,j) - [A X C]_{ij} + B(i,j)`, so on the unit circle the
//! best entry maximizes `Re(b* x)`. `Q = A X C` is kept up to date with a rank-one
//! correction after every entry update. The finite-resolution variant restricts
//! each entry to `2^b` uniformly spaced phases and searches them exhaustively.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{c64, cis, is_hermitian_psd, re_inner, rel_frob_diff, CMat, C64};
use crate::model::PhaseResolution;
use crate::rng::{self, Domain};

/// Relative tolerance used when comparing candidate phases for ties.
const TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseSet {
    Infinite,
    Finite { bits: u32, values: Vec<C64> },
}

impl PhaseSet {
    /// `{ exp(j 2 pi m / 2^b) : m = 0 .. 2^b - 1 }`; quadrant points are exact.
    pub fn finite(bits: u32) -> Self {
        assert!((1..=16).contains(&bits), "phase bits must be in 1..=16, got {bits}");
        let count = 1usize << bits;
        let values = (0..count)
            .map(|m| {
                if (4 * m) % count == 0 {
                    match 4 * m / count {
                        0 => c64(1.0, 0.0),
                        1 => c64(0.0, 1.0),
                        2 => c64(-1.0, 0.0),
                        _ => c64(0.0, -1.0),
                    }
                } else {
                    cis(TAU * m as f64 / count as f64)
                }
            })
            .collect();
        PhaseSet::Finite { bits, values }
    }

    pub fn from_resolution(r: PhaseResolution) -> Self {
        match r {
            PhaseResolution::Infinite => PhaseSet::Infinite,
            PhaseResolution::Bits(b) => PhaseSet::finite(b),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PhaseSet::Finite { .. })
    }

    pub fn values(&self) -> &[C64] {
        match self {
            PhaseSet::Infinite => &[],
            PhaseSet::Finite { values, .. } => values,
        }
    }

    pub fn contains(&self, z: C64, tol: f64) -> bool {
        match self {
            PhaseSet::Infinite => (z.norm() - 1.0).abs() <= tol,
            PhaseSet::Finite { values, .. } => values.iter().any(|f| (z - f).norm() <= tol),
        }
    }

    pub fn check_feasible(&self, m: &CMat, tol: f64) -> Result<()> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !self.contains(m[(i, j)], tol) {
                    return Err(Error::InfeasibleStart { row: i, col: j, value: m[(i, j)] });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct QuadUmProblem {
    a: CMat,
    c: CMat,
    b: CMat,
    phases: PhaseSet,
    a_is_identity: bool,
}

impl QuadUmProblem {
    /// Validates shapes and that `A`, `C` are Hermitian PSD within 1e-10.
    pub fn new(a: CMat, c: CMat, b: CMat, phases: PhaseSet) -> Result<Self> {
        let (m, n) = b.shape();
        if a.shape() != (m, m) || c.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "A is {:?}, C is {:?}, B is {:?}",
                a.shape(),
                c.shape(),
                b.shape()
            )));
        }
        if !is_hermitian_psd(&a, 1e-10) {
            return Err(Error::Dimension("A must be Hermitian positive semidefinite".into()));
        }
        if !is_hermitian_psd(&c, 1e-10) {
            return Err(Error::Dimension("C must be Hermitian positive semidefinite".into()));
        }
        let a_is_identity = a == CMat::identity(m, m);
        Ok(Self { a, c, b, phases, a_is_identity })
    }

    /// Problem with `A = I_m`.
    pub fn with_identity_left(c: CMat, b: CMat, phases: PhaseSet) -> Result<Self> {
        let m = b.nrows();
        Self::new(CMat::identity(m, m), c, b, phases)
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn c(&self) -> &CMat {
        &self.c
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn phases(&self) -> &PhaseSet {
        &self.phases
    }

    pub fn product(&self, x: &CMat) -> CMat {
        if self.a_is_identity {
            x * &self.c
        } else {
            &self.a * x * &self.c
        }
    }

    pub fn objective(&self, x: &CMat) -> f64 {
        self.objective_cached(x, &self.product(x))
    }

    /// `phi(X)` given `Q = A X C`.
    pub fn objective_cached(&self, x: &CMat, q: &CMat) -> f64 {
        re_inner(x, q) - 2.0 * re_inner(x, &self.b)
    }
}

/// Linear coefficient `b` of entry `(i, j)`: minimizing `phi` over that entry alone
/// is maximizing `Re(b* X(i,j))`.
pub fn entry_coefficient(prob: &QuadUmProblem, x: &CMat, q: &CMat, i: usize, j: usize) -> C64 {
    prob.a[(i, i)] * x[(i, j)] * prob.c[(j, j)] - q[(i, j)] + prob.b[(i, j)]
}

/// Best unit-modulus (or in-set) value for coefficient `b`. `b = 0` keeps `current`;
/// finite ties go to the smallest phase index.
pub fn entry_argmax(b: C64, phases: &PhaseSet, current: C64) -> C64 {
    let mag = b.norm();
    match phases {
        PhaseSet::Infinite => {
            if mag == 0.0 || !mag.is_finite() {
                current
            } else {
                b / mag
            }
        }
        PhaseSet::Finite { values, .. } => {
            if mag == 0.0 || !mag.is_finite() {
                return current;
            }
            let score = |v: &C64| (b.conj() * v).re;
            let best = values.iter().map(score).fold(f64::NEG_INFINITY, f64::max);
            let tol = TIE_RTOL * mag;
            *values.iter().find(|v| score(v) >= best - tol).expect("phase set is non-empty")
        }
    }
}

/// Nearest member of a finite phase set for every entry (ties to the smallest index).
/// Continuous phase sets return the input unchanged.
pub fn quantize_nearest(x: &CMat, phases: &PhaseSet) -> CMat {
    match phases {
        PhaseSet::Infinite => x.clone(),
        PhaseSet::Finite { values, .. } => x.map(|z| {
            let dist = |v: &C64| (z - v).norm();
            let best = values.iter().map(dist).fold(f64::INFINITY, f64::min);
            *values.iter().find(|v| dist(v) <= best + TIE_RTOL).expect("phase set is non-empty")
        }),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepOrder {
    /// Row-major cyclic order.
    #[default]
    RowMajor,
    /// Fresh uniformly random permutation of all entries on every sweep.
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep lowers `phi` by at most `rel_tol * |phi|`.
    pub rel_tol: f64,
    pub order: SweepOrder,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { max_sweeps: 100, rel_tol: 1e-8, order: SweepOrder::RowMajor }
    }
}

impl SweepOptions {
    pub fn single(order: SweepOrder) -> Self {
        Self { max_sweeps: 1, rel_tol: 1e-8, order }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub x: CMat,
    /// Maintained `A X C`.
    pub q: CMat,
    pub initial_objective: f64,
    /// Objective after each completed sweep.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Relative Frobenius gap between the maintained `Q` and a fresh `A X C`.
    pub cache_drift: f64,
}

impl SweepResult {
    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.initial_objective)
    }

    pub fn sweeps(&self) -> usize {
        self.trace.len()
    }
}

pub fn bcd_sweep(prob: &QuadUmProblem, x0: &CMat, opts: &SweepOptions) -> Result<SweepResult> {
    bcd_sweep_observed(prob, x0, opts, |_, _, _| {})
}

/// Same as [`bcd_sweep`]; `observer(i, j, &X)` runs after every entry update.
pub fn bcd_sweep_observed<F>(prob: &QuadUmProblem, x0: &CMat, opts: &SweepOptions, mut observer: F) -> Result<SweepResult>
where
    F: FnMut(usize, usize, &CMat),
{
    if x0.shape() != prob.b.shape() {
        return Err(Error::Dimension(format!("start is {:?}, B is {:?}", x0.shape(), prob.b.shape())));
    }
    prob.phases.check_feasible(x0, 1e-9)?;
    let (m, n) = x0.shape();
    let mut x = x0.clone();
    let mut q = prob.product(&x);
    let initial_objective = prob.objective_cached(&x, &q);
    let mut prev = initial_objective;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut order: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();

    for sweep in 0..opts.max_sweeps {
        if let SweepOrder::Random { seed } = opts.order {
            let mut rng = rng::stream(seed, Domain::SweepOrder, sweep as u64);
            order.shuffle(&mut rng);
        }
        for &(i, j) in &order {
            let coef = entry_coefficient(prob, &x, &q, i, j);
            let old = x[(i, j)];
            let new = entry_argmax(coef, &prob.phases, old);
            if new != old {
                let delta = new - old;
                apply_rank_one(prob, &mut q, delta, i, j);
                x[(i, j)] = new;
            }
            observer(i, j, &x);
        }
        let cur = prob.objective_cached(&x, &q);
        trace.push(cur);
        let decrease = prev - cur;
        let scale = prev.abs();
        prev = cur;
        if decrease <= opts.rel_tol * scale.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let fresh = prob.product(&x);
    let cache_drift = if fresh.norm() == 0.0 { (&q - &fresh).norm() } else { rel_frob_diff(&q, &fresh) };
    Ok(SweepResult { x, q, initial_objective, trace, converged, cache_drift })
}

/// `Q += delta * A(:, i) C(j, :)`.
fn apply_rank_one(prob: &QuadUmProblem, q: &mut CMat, delta: C64, i: usize, j: usize) {
    let n = q.ncols();
    if prob.a_is_identity {
        for s in 0..n {
            q[(i, s)] += delta * prob.c[(j, s)];
        }
    } else {
        let m = q.nrows();
        for s in 0..n {
            let cs = delta * prob.c[(j, s)];
            if cs == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..m {
                q[(r, s)] += prob.a[(r, i)] * cs;
            }
        }
    }
}
