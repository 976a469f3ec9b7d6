//! Penalty dual decomposition for hybrid precoding.
//!
//! The rate problem is rewritten in weighted-MSE form with auxiliary precoders
//! `X_k` tied to the hybrid product by `X_k = V_RF V_BB_k`. The coupling is
//! moved into an augmented Lagrangian
//!
//! ```text
//! sum_k [log det W_k - Tr(W_k E_k(U, X)) + d] - sum_k 1/(2 rho) ||X_k - V_RF V_BB_k + rho Y_k||^2
//! ```
//!
//! which is maximized by block coordinate descent over
//! `{U_BB, W}`, `V_RF`, `U_RF`, `V_BB` and `X` (inner loop). The outer loop
//! either takes a dual step on `Y` or shrinks `rho`, depending on how much the
//! coupling violation dropped.

mod blocks;
mod report;
mod solver;

use serde::{Deserialize, Serialize};

pub use blocks::{
    update_ubb, update_urf, update_vbb, update_vrf, update_w, update_x, SubproblemWorkspace, XUpdate,
};
pub use report::{OuterRecord, PddReport, PddStatus, TRACE_HEADER};
pub use solver::{
    initialize, inner_bcd, inner_bcd_observed, pdd_solve, pdd_solve_from, quantized_pdd_solve, Block,
    InnerOutcome,
};

use crate::error::{Error, Result};
use crate::linalg::{logdet_hpd, max_abs, CMat};
use crate::model::{mse_matrix, ChannelSet, HybridState, SystemConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PddConfig {
    /// Initial penalty parameter; `None` means `100 / N`.
    pub rho0: Option<f64>,
    /// Penalty shrink factor, also the inner-tolerance decay.
    pub c: f64,
    pub eta0: f64,
    pub eps0: f64,
    pub eps_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub eta_factor: f64,
    /// Outer iterations run with continuous phases before switching to the
    /// finite phase set.
    pub finite_warmstart_iters: usize,
    /// Entry sweeps per analog-matrix block update.
    pub rf_sweeps: usize,
    /// Randomized entry order in the analog sweeps (seeded from the solve seed).
    pub random_sweep_order: bool,
}

impl Default for PddConfig {
    fn default() -> Self {
        Self {
            rho0: None,
            c: 0.8,
            eta0: 1e-3,
            eps0: 1e-3,
            eps_outer: 1e-6,
            max_inner: 30,
            max_outer: 200,
            eta_factor: 0.9,
            finite_warmstart_iters: 20,
            rf_sweeps: 1,
            random_sweep_order: false,
        }
    }
}

impl PddConfig {
    pub fn initial_rho(&self, num_tx_antennas: usize) -> f64 {
        self.rho0.unwrap_or(100.0 / num_tx_antennas as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("pdd: {m}")));
        if !(self.c > 0.0 && self.c < 1.0) {
            return bad("c must lie in (0, 1)");
        }
        if let Some(r) = self.rho0 {
            if !(r > 0.0 && r.is_finite()) {
                return bad("rho0 must be positive");
            }
        }
        for (name, v) in [("eta0", self.eta0), ("eps0", self.eps0), ("eps_outer", self.eps_outer), ("eta_factor", self.eta_factor)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.max_inner == 0 || self.max_outer == 0 || self.rf_sweeps == 0 {
            return bad("iteration caps must be positive");
        }
        Ok(())
    }
}

/// Full primal/dual state of the PDD iteration.
#[derive(Clone, Debug)]
pub struct PddState {
    pub hybrid: HybridState,
    /// Auxiliary precoders, per user `N x d`.
    pub x: Vec<CMat>,
    /// Dual variables, per user `N x d`.
    pub y: Vec<CMat>,
    /// MSE weights, per user `d x d` Hermitian PD.
    pub w: Vec<CMat>,
    pub rho: f64,
    pub eta: f64,
    pub eps: f64,
    pub outer_iter: usize,
}

impl PddState {
    /// `X_k - V_RF V_BB_k` for every user.
    pub fn coupling_residuals(&self) -> Vec<CMat> {
        self.x.iter().zip(&self.hybrid.v_bb).map(|(x, b)| x - &self.hybrid.v_rf * b).collect()
    }
}

/// `max_k ||X_k - V_RF V_BB_k||_inf` (largest entry modulus).
pub fn constraint_violation(st: &PddState) -> f64 {
    st.coupling_residuals().iter().map(max_abs).fold(0.0, f64::max)
}

/// Augmented Lagrangian value in nats.
pub fn aug_lagrangian_value(cfg: &SystemConfig, channels: &ChannelSet, st: &PddState) -> Result<f64> {
    let d = cfg.streams_per_user as f64;
    let mut total = 0.0;
    for k in 0..cfg.num_users {
        let w = &st.w[k];
        let ld = logdet_hpd(w).ok_or(Error::NotPositiveDefinite { user: k })?;
        let e = mse_matrix(cfg, &channels.h[k], &st.hybrid.u_rf[k], &st.hybrid.u_bb[k], &st.x, k);
        let tr = (w * e).trace().re;
        total += ld - tr + d;
    }
    let penalty: f64 = st
        .coupling_residuals()
        .iter()
        .zip(&st.y)
        .map(|(r, y)| (r + y.scale(st.rho)).norm_squared())
        .sum();
    Ok(total - penalty / (2.0 * st.rho))
}
