//! Power-constrained ridge solves `X_k = (A + mu I)^{-1} B_k` with the multiplier
//! `mu >= 0` found by bisection on the monotone transmit-power curve.

use crate::linalg::{CMat, LowRankShift};

/// Relative eigenvalue threshold below which a direction is treated as null.
const NULL_RCOND: f64 = 1e-12;
const MAX_BISECTION_STEPS: usize = 400;

/// `power(mu) = sum_i weights[i] / (eigenvalues[i] + mu)^2`.
#[derive(Clone, Debug)]
pub struct PowerCurve {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PowerCurve {
    pub fn power(&self, mu: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| w / ((a + mu) * (a + mu)))
            .sum()
    }

    /// Upper end of the bisection bracket, `sqrt(sum_i b_i / P)`.
    pub fn mu_max(&self, budget: f64) -> f64 {
        (self.weights.iter().sum::<f64>() / budget).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplier {
    pub mu: f64,
    pub power: f64,
    pub steps: usize,
}

/// Smallest `mu >= 0` with `power(mu) <= budget`, to bisection accuracy.
///
/// Stops when `|power(mu) - P| <= 1e-10 P` or the bracket is narrower than
/// `1e-14 (1 + mu_max)`; in the latter case the feasible end is returned.
pub fn find_multiplier(curve: &PowerCurve, budget: f64) -> Multiplier {
    let p0 = curve.power(0.0);
    if p0 <= budget {
        return Multiplier { mu: 0.0, power: p0, steps: 0 };
    }
    let mu_max = curve.mu_max(budget);
    let width_tol = 1e-14 * (1.0 + mu_max);
    let (mut lo, mut hi) = (0.0_f64, mu_max);
    let mut hi_power = curve.power(hi);
    for step in 1..=MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = curve.power(mid);
        if (p - budget).abs() <= 1e-10 * budget && p <= budget * (1.0 + 1e-10) {
            return Multiplier { mu: mid, power: p, steps: step };
        }
        if p > budget {
            lo = mid;
        } else {
            hi = mid;
            hi_power = p;
        }
        if hi - lo <= width_tol {
            return Multiplier { mu: hi, power: hi_power, steps: step };
        }
    }
    Multiplier { mu: hi, power: hi_power, steps: MAX_BISECTION_STEPS }
}

/// Ridge system `A = shift I + L G L^H` shared by all users' right-hand sides.
pub struct RidgeSystem<'a> {
    pub structure: &'a LowRankShift,
    /// `basis^H B_k` per user.
    projections: Vec<CMat>,
    /// Residual of `B_k` outside the basis, per user.
    residuals: Vec<CMat>,
    null_basis: Vec<bool>,
    null_complement: bool,
}

impl<'a> RidgeSystem<'a> {
    pub fn new(structure: &'a LowRankShift, rhs: &[CMat]) -> Self {
        let a_max = structure
            .values
            .iter()
            .cloned()
            .fold(structure.shift.abs(), |acc, v| acc.max(v.abs()));
        let null_tol = NULL_RCOND * a_max;
        let null_basis = structure.values.iter().map(|&v| v <= null_tol).collect();
        let null_complement = structure.shift <= null_tol;
        let projections: Vec<CMat> = rhs.iter().map(|b| structure.basis.adjoint() * b).collect();
        let residuals = rhs
            .iter()
            .zip(&projections)
            .map(|(b, p)| b - &structure.basis * p)
            .collect();
        Self { structure, projections, residuals, null_basis, null_complement }
    }

    /// Power curve with `b_i` aggregated over users; null directions carry no weight.
    pub fn curve(&self) -> PowerCurve {
        let r = self.structure.values.len();
        let mut eigenvalues = self.structure.values.clone();
        let mut weights = vec![0.0; r];
        for p in &self.projections {
            for (i, w) in weights.iter_mut().enumerate() {
                *w += p.row(i).norm_squared();
            }
        }
        for (w, &null) in weights.iter_mut().zip(&self.null_basis) {
            if null {
                *w = 0.0;
            }
        }
        eigenvalues.push(self.structure.shift);
        let complement: f64 = if self.null_complement {
            0.0
        } else {
            self.residuals.iter().map(|r| r.norm_squared()).sum()
        };
        weights.push(complement);
        PowerCurve { eigenvalues, weights }
    }

    /// `(A + mu I)^{-1} B_k` for every user (pseudo-inverse on null directions).
    pub fn solve(&self, mu: f64) -> Vec<CMat> {
        let basis = &self.structure.basis;
        let scales: Vec<f64> = self
            .structure
            .values
            .iter()
            .zip(&self.null_basis)
            .map(|(&a, &null)| if null { 0.0 } else { 1.0 / (a + mu) })
            .collect();
        let comp_scale = if self.null_complement { 0.0 } else { 1.0 / (self.structure.shift + mu) };
        self.projections
            .iter()
            .zip(&self.residuals)
            .map(|(p, res)| {
                let mut scaled = p.clone();
                for (i, s) in scales.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(*s);
                }
                basis * scaled + res.scale(comp_scale)
            })
            .collect()
    }

    /// Solves with the smallest feasible multiplier for `budget`.
    pub fn solve_with_budget(&self, budget: f64) -> (Vec<CMat>, Multiplier) {
        let m = find_multiplier(&self.curve(), budget);
        (self.solve(m.mu), m)
    }
}
