//! Deterministic random streams.
//!
//! Every draw comes from ChaCha20 (a 64-bit-counter block generator) keyed by
//! `ChaCha20Rng::seed_from_u64(seed)` with the stream id set to
//! `(domain << 32) | index`. The channel of user `k` for seed `s` therefore
//! always uses stream `(Domain::Channel, k)` no matter which users are drawn
//! first or on which thread.
//!
//! Uniforms are `rng.random::<f64>()` (top 53 bits of a `u64`, in `[0, 1)`).
//! A circularly-symmetric `CN(0, 1)` sample uses two uniforms `u1, u2`:
//! `sqrt(-ln(1 - u1)) * exp(j 2 pi u2)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::linalg::{cis, C64, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 1,
    PddInit = 2,
    Wmmse = 3,
    MapInit = 4,
    SweepOrder = 5,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 32) | (index & 0xffff_ffff));
    rng
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1 = uniform(rng);
    let u2 = uniform(rng);
    cis(TAU * u2) * (-(1.0 - u1).ln()).sqrt()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // column-major fill order
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn random_phase_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cis(TAU * uniform(rng)))
}
