//! Closed-form and entrywise block updates of the inner loop.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_hpd, condition_number, hermitian_part, pinv, CMat, LowRankShift};
use crate::model::{ChannelSet, SystemConfig};
use crate::power::{Multiplier, RidgeSystem};
use crate::unit_modulus::{bcd_sweep, PhaseSet, QuadUmProblem, SweepOptions, SweepResult};

use super::PddState;

const BRACKET_COND_LIMIT: f64 = 1e14;

/// Per-user receive covariances shared by the combiner updates.
#[derive(Clone, Debug, Default)]
pub struct SubproblemWorkspace {
    /// `A_k = sigma^2 I + sum_j H_k X_j X_j^H H_k^H`, per user `M x M`.
    pub a_k: Vec<CMat>,
}

impl SubproblemWorkspace {
    pub fn new(cfg: &SystemConfig, channels: &ChannelSet, x: &[CMat]) -> Self {
        let mut ws = Self::default();
        ws.refresh(cfg, channels, x);
        ws
    }

    pub fn refresh(&mut self, cfg: &SystemConfig, channels: &ChannelSet, x: &[CMat]) {
        let m = cfg.num_rx_antennas;
        self.a_k = channels
            .h
            .iter()
            .map(|h| {
                let mut a = CMat::identity(m, m).scale(cfg.noise_variance);
                for xj in x {
                    let g = h * xj;
                    a += &g * g.adjoint();
                }
                hermitian_part(&a)
            })
            .collect();
    }
}

/// MMSE digital combiner `(U_RF^H A_k U_RF)^+ U_RF^H H_k X_k`.
pub fn update_ubb(a_k: &CMat, h_k: &CMat, u_rf_k: &CMat, x_k: &CMat) -> CMat {
    let s = hermitian_part(&(u_rf_k.adjoint() * a_k * u_rf_k));
    pinv(&s) * (u_rf_k.adjoint() * h_k * x_k)
}

/// `W_k = (I - U_BB^H U_RF^H H_k X_k)^{-1}`, valid when `U_BB` is the MMSE combiner.
pub fn update_w(h_k: &CMat, u_rf_k: &CMat, u_bb_k: &CMat, x_k: &CMat, user: usize) -> Result<CMat> {
    let d = u_bb_k.ncols();
    let g = u_bb_k.adjoint() * u_rf_k.adjoint() * h_k * x_k;
    let bracket = hermitian_part(&(CMat::identity(d, d) - g));
    let cond = condition_number(&bracket);
    if !(cond <= BRACKET_COND_LIMIT) {
        return Err(Error::SingularBracket { user, cond });
    }
    let w = bracket.try_inverse().ok_or(Error::SingularBracket { user, cond })?;
    let w = hermitian_part(&w);
    if cholesky_hpd(&w).is_none() {
        return Err(Error::NotPositiveDefinite { user });
    }
    Ok(w)
}

/// Least-squares baseband precoder `V_RF^+ Z_k`.
pub fn update_vbb(v_rf: &CMat, z_k: &CMat) -> CMat {
    pinv(v_rf) * z_k
}

/// Diagnostics of the auxiliary-precoder update.
#[derive(Clone, Debug)]
pub struct XUpdate {
    pub x: Vec<CMat>,
    pub multiplier: Multiplier,
    /// Eigen-structure of `A_rho`.
    pub a_rho: LowRankShift,
    /// `B_rho,k` per user.
    pub b_rho: Vec<CMat>,
}

/// Power-constrained minimizer over `{X_k}`: `X_k = (A_rho + mu I)^{-1} B_rho,k`.
pub fn update_x(cfg: &SystemConfig, channels: &ChannelSet, st: &PddState) -> XUpdate {
    let hy = &st.hybrid;
    let factors: Vec<CMat> = (0..cfg.num_users)
        .map(|j| channels.h[j].adjoint() * &hy.u_rf[j] * &hy.u_bb[j])
        .collect();
    let a_rho = LowRankShift::new(cfg.num_tx_antennas, 1.0 / (2.0 * st.rho), &factors, &st.w);
    let b_rho: Vec<CMat> = (0..cfg.num_users)
        .map(|k| &factors[k] * &st.w[k] + ((&hy.v_rf * &hy.v_bb[k]).scale(1.0 / st.rho) - &st.y[k]).scale(0.5))
        .collect();
    let system = RidgeSystem::new(&a_rho, &b_rho);
    let (x, multiplier) = system.solve_with_budget(cfg.power);
    XUpdate { x, multiplier, a_rho, b_rho }
}

/// One or more entry sweeps on `Tr(V^H V C) - 2 Re Tr(V^H B)` with
/// `C = sum_k V_BB_k V_BB_k^H`, `B = sum_k (X_k + rho Y_k) V_BB_k^H`.
pub fn update_vrf(st: &PddState, phases: &PhaseSet, opts: &SweepOptions) -> Result<SweepResult> {
    let hy = &st.hybrid;
    let (n, n_rf) = hy.v_rf.shape();
    let mut c = CMat::zeros(n_rf, n_rf);
    let mut b = CMat::zeros(n, n_rf);
    for k in 0..hy.v_bb.len() {
        c += &hy.v_bb[k] * hy.v_bb[k].adjoint();
        b += (&st.x[k] + st.y[k].scale(st.rho)) * hy.v_bb[k].adjoint();
    }
    let prob = QuadUmProblem::with_identity_left(hermitian_part(&c), b, phases.clone())?;
    bcd_sweep(&prob, &hy.v_rf, opts)
}

/// Entry sweeps on `Tr(U^H A_k U C) - 2 Re Tr(U^H B)` with
/// `C = U_BB W U_BB^H`, `B = H_k X_k W U_BB^H`.
pub fn update_urf(
    a_k: &CMat,
    channels: &ChannelSet,
    st: &PddState,
    k: usize,
    phases: &PhaseSet,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let hy = &st.hybrid;
    let ubb = &hy.u_bb[k];
    let w = &st.w[k];
    let c = hermitian_part(&(ubb * w * ubb.adjoint()));
    let b = &channels.h[k] * &st.x[k] * w * ubb.adjoint();
    let prob = QuadUmProblem::new(a_k.clone(), c, b, phases.clone())?;
    bcd_sweep(&prob, &hy.u_rf[k], opts)
}
