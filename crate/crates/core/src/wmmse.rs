//! Fully-digital weighted-MMSE sum-rate maximization.
//!
//! Alternates MMSE receivers, MSE weights and power-constrained precoders.
//! Each cycle cannot decrease the sum rate, so the method converges to a local
//! optimum; the best of several random starts is kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_hpd, frob_sq, hermitian_part, pinv, CMat, LowRankShift};
use crate::model::{spectral_efficiency_digital, ChannelSet, SystemConfig};
use crate::pdd::update_w;
use crate::power::{Multiplier, RidgeSystem};
use crate::rng::{self, Domain};

/// Per-user digital precoders `N x d`, receivers `M x d` and weights `d x d`.
#[derive(Clone, Debug)]
pub struct FdState {
    pub v: Vec<CMat>,
    pub u: Vec<CMat>,
    pub w: Vec<CMat>,
}

impl FdState {
    pub fn transmit_power(&self) -> f64 {
        self.v.iter().map(frob_sq).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmmseConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative rate change of a cycle is at most this.
    pub rel_tol: f64,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self { restarts: 3, max_iters: 500, rel_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct WmmseOutcome {
    pub state: FdState,
    /// Sum rate in bps/Hz.
    pub rate: f64,
    /// Rate after initialization and after every cycle of the winning start.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub best_restart: usize,
}

/// `U_k = (sigma^2 I + sum_j H_k V_j V_j^H H_k^H)^+ H_k V_k`.
pub fn fd_update_receivers(cfg: &SystemConfig, channels: &ChannelSet, v: &[CMat]) -> Vec<CMat> {
    let m = cfg.num_rx_antennas;
    channels
        .h
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let mut a = CMat::identity(m, m).scale(cfg.noise_variance);
            for vj in v {
                let g = h * vj;
                a += &g * g.adjoint();
            }
            let a = hermitian_part(&a);
            let rhs = h * &v[k];
            match cholesky_hpd(&a) {
                Some(ch) => ch.solve(&rhs),
                None => pinv(&a) * rhs,
            }
        })
        .collect()
}

/// `W_k = (I - U_k^H H_k V_k)^{-1}`.
pub fn fd_update_weights(channels: &ChannelSet, u: &[CMat], v: &[CMat]) -> Result<Vec<CMat>> {
    channels
        .h
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let eye = CMat::identity(h.nrows(), h.nrows());
            update_w(h, &eye, &u[k], &v[k], k)
        })
        .collect()
}

/// `V_k = (sum_j H_j^H U_j W_j U_j^H H_j + mu I)^{-1} H_k^H U_k W_k`, with `mu`
/// the smallest multiplier meeting the power budget.
pub fn fd_update_precoders(cfg: &SystemConfig, channels: &ChannelSet, u: &[CMat], w: &[CMat]) -> (Vec<CMat>, Multiplier) {
    let factors: Vec<CMat> = channels.h.iter().zip(u).map(|(h, uk)| h.adjoint() * uk).collect();
    let structure = LowRankShift::new(cfg.num_tx_antennas, 0.0, &factors, w);
    let rhs: Vec<CMat> = factors.iter().zip(w).map(|(f, wk)| f * wk).collect();
    RidgeSystem::new(&structure, &rhs).solve_with_budget(cfg.power)
}

/// Gaussian precoders with `||V_k||^2 = P / K`.
pub fn random_start(cfg: &SystemConfig, seed: u64, restart: u64) -> Vec<CMat> {
    let mut rng = rng::stream(seed, Domain::Wmmse, restart);
    let per_user = cfg.power / cfg.num_users as f64;
    (0..cfg.num_users)
        .map(|_| {
            let g = rng::gaussian_matrix(&mut rng, cfg.num_tx_antennas, cfg.streams_per_user);
            let s = (per_user / frob_sq(&g)).sqrt();
            g.scale(s)
        })
        .collect()
}

/// Runs the alternation from the given precoders.
pub fn wmmse_from(cfg: &SystemConfig, channels: &ChannelSet, wcfg: &WmmseConfig, v0: Vec<CMat>) -> Result<WmmseOutcome> {
    let rate_of = |v: &[CMat]| spectral_efficiency_digital(cfg, channels, v).total;
    let mut v = v0;
    let mut rate = rate_of(&v);
    let mut trace = vec![rate];
    let mut iterations = 0;
    while iterations < wcfg.max_iters {
        iterations += 1;
        let u = fd_update_receivers(cfg, channels, &v);
        let w = fd_update_weights(channels, &u, &v)?;
        v = fd_update_precoders(cfg, channels, &u, &w).0;
        let next = rate_of(&v);
        trace.push(next);
        let change = (next - rate).abs() / rate.abs().max(f64::MIN_POSITIVE);
        rate = next;
        if change <= wcfg.rel_tol {
            break;
        }
    }
    // receivers and weights consistent with the returned precoders
    let u = fd_update_receivers(cfg, channels, &v);
    let w = fd_update_weights(channels, &u, &v)?;
    Ok(WmmseOutcome { state: FdState { v, u, w }, rate, trace, iterations, best_restart: 0 })
}

/// Best of `restarts` random starts; ties go to the earliest start.
pub fn wmmse_solve(cfg: &SystemConfig, channels: &ChannelSet, wcfg: &WmmseConfig, seed: u64) -> Result<WmmseOutcome> {
    cfg.validate()?;
    if wcfg.restarts == 0 || wcfg.max_iters == 0 {
        return Err(Error::InvalidConfig("wmmse: restarts and max_iters must be positive".into()));
    }
    let mut best: Option<WmmseOutcome> = None;
    for r in 0..wcfg.restarts {
        let mut out = wmmse_from(cfg, channels, wcfg, random_start(cfg, seed, r as u64))?;
        out.best_restart = r;
        if best.as_ref().is_none_or(|b| out.rate > b.rate) {
            best = Some(out);
        }
    }
    Ok(best.expect("at least one restart"))
}
