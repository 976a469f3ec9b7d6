use std::f64::consts::{PI, TAU};

use crate::linalg::{cis, CMat, CVec, C64};
use crate::rng::{self, Domain};

use super::SystemConfig;

/// Uniform-linear-array response, `(1/sqrt(n)) exp(j pi i sin(theta))`, unit norm.
pub fn array_response(theta: f64, n: usize) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    let s = theta.sin();
    CVec::from_fn(n, |i, _| cis(PI * i as f64 * s) * scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub gain: C64,
    /// Angle of arrival (receive side), radians.
    pub arrival: f64,
    /// Angle of departure (transmit side), radians.
    pub departure: f64,
}

/// Per-user path draws, `paths[k].len() == num_paths` for every user.
#[derive(Clone, Debug, PartialEq)]
pub struct PathParams {
    pub num_paths: usize,
    pub paths: Vec<Vec<Path>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Per user `M x N`.
    pub h: Vec<CMat>,
    pub params: PathParams,
    pub seed: u64,
}

impl ChannelSet {
    /// Rebuilds the channel matrices from explicit path parameters.
    pub fn from_paths(cfg: &SystemConfig, params: PathParams, seed: u64) -> Self {
        let (n, m) = (cfg.num_tx_antennas, cfg.num_rx_antennas);
        let h = params.paths.iter().map(|user| channel_matrix(n, m, params.num_paths, user)).collect();
        Self { h, params, seed }
    }

    pub fn num_users(&self) -> usize {
        self.h.len()
    }
}

fn channel_matrix(n: usize, m: usize, num_paths: usize, paths: &[Path]) -> CMat {
    let scale = ((n * m) as f64 / num_paths as f64).sqrt();
    let mut h = CMat::zeros(m, n);
    for p in paths {
        let ar = array_response(p.arrival, m);
        let at = array_response(p.departure, n);
        h += (ar * at.adjoint()) * (p.gain * scale);
    }
    h
}

/// Geometric channel with `num_paths` paths per user.
///
/// User `k` draws from its own stream; for each path in order the draws are
/// `u1, u2` (gain), `u3` (arrival angle `2 pi u3`), `u4` (departure angle `2 pi u4`).
pub fn generate_channels(cfg: &SystemConfig, num_paths: usize, seed: u64) -> ChannelSet {
    assert!(num_paths >= 1, "at least one path is required");
    let paths = (0..cfg.num_users)
        .map(|k| {
            let mut rng = rng::stream(seed, Domain::Channel, k as u64);
            (0..num_paths)
                .map(|_| {
                    let gain = rng::complex_gaussian(&mut rng);
                    let arrival = TAU * rng::uniform(&mut rng);
                    let departure = TAU * rng::uniform(&mut rng);
                    Path { gain, arrival, departure }
                })
                .collect()
        })
        .collect();
    ChannelSet::from_paths(cfg, PathParams { num_paths, paths }, seed)
}
