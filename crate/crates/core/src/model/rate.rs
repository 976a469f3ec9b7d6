use std::f64::consts::LN_2;

use crate::linalg::{logdet_hpd, CMat};

use super::{ChannelSet, HybridState, SystemConfig};

/// Sum rate with per-user breakdown (bits/s/Hz).
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub total: f64,
    /// Set when some interference-plus-noise matrix had to be regularized.
    pub regularized: bool,
}

/// `U_RF_k^H (sigma^2 I + sum_{j != k} H_k X_j X_j^H H_k^H) U_RF_k`.
pub fn interference_cov(cfg: &SystemConfig, h_k: &CMat, u_rf_k: &CMat, x: &[CMat], k: usize) -> CMat {
    let t = u_rf_k.adjoint() * h_k;
    let mut cov = (u_rf_k.adjoint() * u_rf_k).scale(cfg.noise_variance);
    for (j, xj) in x.iter().enumerate() {
        if j == k {
            continue;
        }
        let g = &t * xj;
        cov += &g * g.adjoint();
    }
    cov
}

/// MSE matrix `(I - U_BB^H U_RF^H H_k X_k)(.)^H + U_BB^H Upsilon_k U_BB` of user `k`.
pub fn mse_matrix(cfg: &SystemConfig, h_k: &CMat, u_rf_k: &CMat, u_bb_k: &CMat, x: &[CMat], k: usize) -> CMat {
    let d = u_bb_k.ncols();
    let g = u_bb_k.adjoint() * u_rf_k.adjoint() * h_k * &x[k];
    let e = CMat::identity(d, d) - g;
    let cov = interference_cov(cfg, h_k, u_rf_k, x, k);
    &e * e.adjoint() + u_bb_k.adjoint() * cov * u_bb_k
}

/// Rate in nats of one user seen through `t = C^H H_k` with combiner Gram `C^H C`.
fn user_rate_nats(noise: f64, t: &CMat, gram: &CMat, precoders: &[CMat], k: usize) -> (f64, bool) {
    let r = t.nrows();
    let mut cov = gram.scale(noise);
    let mut signal = CMat::zeros(r, r);
    for (j, xj) in precoders.iter().enumerate() {
        let g = t * xj;
        if j == k {
            signal = &g * g.adjoint();
        } else {
            cov += &g * g.adjoint();
        }
    }
    let mut regularized = false;
    let ld_cov = match logdet_hpd(&cov) {
        Some(v) => v,
        None => {
            regularized = true;
            cov += CMat::identity(r, r).scale(1e-12 * noise);
            logdet_hpd(&cov).unwrap_or(f64::NEG_INFINITY)
        }
    };
    let total = &cov + &signal;
    let ld_total = match logdet_hpd(&total) {
        Some(v) => v,
        None => {
            regularized = true;
            logdet_hpd(&(total + CMat::identity(r, r).scale(1e-12 * noise))).unwrap_or(ld_cov)
        }
    };
    let rate = ld_total - ld_cov;
    (if rate.is_finite() { rate.max(0.0) } else { 0.0 }, regularized)
}

fn collect(rates: Vec<(f64, bool)>) -> RateReport {
    let per_user: Vec<f64> = rates.iter().map(|(r, _)| r / LN_2).collect();
    RateReport {
        total: per_user.iter().sum(),
        regularized: rates.iter().any(|(_, f)| *f),
        per_user,
    }
}

/// Hybrid sum rate `sum_k log2 det(I + U_RF^H H_k X_k X_k^H H_k^H U_RF Upsilon_k^{-1})`
/// with `X_k = V_RF V_BB_k` (MMSE digital combining implied).
pub fn spectral_efficiency_report(cfg: &SystemConfig, channels: &ChannelSet, state: &HybridState) -> RateReport {
    let precoders = state.precoders();
    let rates = channels
        .h
        .iter()
        .zip(&state.u_rf)
        .enumerate()
        .map(|(k, (h, u))| {
            let t = u.adjoint() * h;
            let gram = u.adjoint() * u;
            user_rate_nats(cfg.noise_variance, &t, &gram, &precoders, k)
        })
        .collect();
    collect(rates)
}

pub fn spectral_efficiency(cfg: &SystemConfig, channels: &ChannelSet, state: &HybridState) -> f64 {
    spectral_efficiency_report(cfg, channels, state).total
}

/// Fully-digital sum rate from per-user `N x d` precoders (no combiner projection).
pub fn spectral_efficiency_digital(cfg: &SystemConfig, channels: &ChannelSet, precoders: &[CMat]) -> RateReport {
    let m = cfg.num_rx_antennas;
    let gram = CMat::identity(m, m);
    let rates = channels
        .h
        .iter()
        .enumerate()
        .map(|(k, h)| user_rate_nats(cfg.noise_variance, h, &gram, precoders, k))
        .collect();
    collect(rates)
}
