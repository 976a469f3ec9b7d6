#![allow(dead_code)]

use hbf_core::linalg::{c64, hermitian_part, CMat};
use hbf_core::model::{generate_channels, ChannelSet, HybridState, SystemConfig};
use hbf_core::rng::{self, Domain};
use rand_chacha::ChaCha20Rng;

pub fn rng_for(seed: u64) -> ChaCha20Rng {
    // test fixtures draw from a domain no solver uses
    rng::stream(seed ^ 0x5eed_0000, Domain::SweepOrder, 0xffff)
}

pub fn gaussian(r: &mut ChaCha20Rng, rows: usize, cols: usize) -> CMat {
    rng::gaussian_matrix(r, rows, cols)
}

/// `G G^H + floor I` with `G` Gaussian `n x rank`.
pub fn random_psd(r: &mut ChaCha20Rng, n: usize, rank: usize, floor: f64) -> CMat {
    let g = gaussian(r, n, rank);
    hermitian_part(&(&g * g.adjoint() + CMat::identity(n, n).scale(floor)))
}

pub fn random_unitary(r: &mut ChaCha20Rng, n: usize) -> CMat {
    gaussian(r, n, n).qr().q()
}

pub fn random_hybrid(r: &mut ChaCha20Rng, cfg: &SystemConfig) -> HybridState {
    let k = cfg.num_users;
    HybridState {
        v_rf: rng::random_phase_matrix(r, cfg.num_tx_antennas, cfg.num_tx_rf),
        v_bb: (0..k).map(|_| gaussian(r, cfg.num_tx_rf, cfg.streams_per_user)).collect(),
        u_rf: (0..k).map(|_| rng::random_phase_matrix(r, cfg.num_rx_antennas, cfg.num_rx_rf)).collect(),
        u_bb: (0..k).map(|_| gaussian(r, cfg.num_rx_rf, cfg.streams_per_user)).collect(),
    }
}

pub fn small_instance(seed: u64) -> (SystemConfig, ChannelSet) {
    let cfg = SystemConfig::new(8, 4, 2, 1, 2, 1).unwrap().with_snr_db(5.0);
    let ch = generate_channels(&cfg, 15, seed);
    (cfg, ch)
}

pub fn scalar(v: f64) -> CMat {
    CMat::from_element(1, 1, c64(v, 0.0))
}
