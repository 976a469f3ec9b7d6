//! Matrix-approximation hybrid design: factor a fully-digital precoder (and each
//! user's digital receiver) into analog times baseband parts by alternating a
//! least-squares baseband fit with entrywise analog updates, then rescale the
//! precoder to the power budget.
//!
//! Receiver factors are not rescaled: the rate is evaluated with MMSE digital
//! combining inside the analog subspace, so only the column space of `U_RF_k`
//! matters.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{frob_sq, pinv, CMat};
use crate::model::{spectral_efficiency, ChannelSet, HybridState, SystemConfig};
use crate::par::{self, Execution};
use crate::rng::{self, Domain};
use crate::unit_modulus::{bcd_sweep, quantize_nearest, PhaseSet, QuadUmProblem, SweepOptions, SweepOrder, SweepResult};
use crate::wmmse::{wmmse_solve, WmmseConfig, WmmseOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub max_alternations: usize,
    /// Stop when the relative change of the approximation error is at most this.
    pub rel_tol: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { max_alternations: 200, rel_tol: 1e-8 }
    }
}

/// `min ||target - rf * bb||_F^2` over unit-modulus `rf` and unconstrained `bb`.
#[derive(Clone, Debug)]
pub struct MapProblem {
    pub target: CMat,
    pub rf: CMat,
    pub bb: CMat,
    pub phases: PhaseSet,
}

impl MapProblem {
    /// Starts from `rf0` with the matching least-squares baseband.
    pub fn new(target: CMat, rf0: CMat, phases: PhaseSet) -> Self {
        let bb = map_update_vbb(&rf0, &target);
        Self { target, rf: rf0, bb, phases }
    }

    pub fn error(&self) -> f64 {
        frob_sq(&(&self.target - &self.rf * &self.bb))
    }
}

/// Least-squares baseband `rf^+ target`.
pub fn map_update_vbb(rf: &CMat, target: &CMat) -> CMat {
    pinv(rf) * target
}

/// One entry sweep on `||target - rf bb||^2` over `rf` with `bb` fixed.
pub fn map_update_vrf_entries(prob: &MapProblem) -> Result<SweepResult> {
    let c = &prob.bb * prob.bb.adjoint();
    let b = &prob.target * prob.bb.adjoint();
    let quad = QuadUmProblem::with_identity_left(crate::linalg::hermitian_part(&c), b, prob.phases.clone())?;
    bcd_sweep(&quad, &prob.rf, &SweepOptions::single(SweepOrder::RowMajor))
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub rf: CMat,
    pub bb: CMat,
    /// Approximation error after the initial fit and after every alternation.
    pub trace: Vec<f64>,
    pub alternations: usize,
}

impl Factorization {
    pub fn error(&self) -> f64 {
        *self.trace.last().expect("non-empty trace")
    }
}

/// Alternates analog sweeps and baseband refits from `rf0`.
pub fn factorize(target: &CMat, rf0: CMat, phases: &PhaseSet, mcfg: &MapConfig) -> Result<Factorization> {
    let mut prob = MapProblem::new(target.clone(), quantize_nearest(&rf0, phases), phases.clone());
    let mut err = prob.error();
    let mut trace = vec![err];
    let mut alternations = 0;
    let scale = frob_sq(target).max(f64::MIN_POSITIVE);
    while alternations < mcfg.max_alternations {
        alternations += 1;
        prob.rf = map_update_vrf_entries(&prob)?.x;
        prob.bb = map_update_vbb(&prob.rf, &prob.target);
        let next = prob.error();
        trace.push(next);
        // relative to the target energy once the error itself is negligible
        let change = (err - next).abs() / err.max(1e-14 * scale);
        err = next;
        if change <= mcfg.rel_tol {
            break;
        }
    }
    Ok(Factorization { rf: prob.rf, bb: prob.bb, trace, alternations })
}

#[derive(Clone, Debug)]
pub struct MapOutcome {
    pub hybrid: HybridState,
    pub rate: f64,
    pub precoder: Factorization,
    pub decoders: Vec<Factorization>,
    pub power_scale: f64,
}

fn hstack(blocks: &[CMat]) -> CMat {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), b.shape()).copy_from(b);
        off += b.ncols();
    }
    out
}

/// Factors a given fully-digital solution. Analog starts are uniform random
/// phases: stream `(seed, MapInit, 0)` for the precoder and `(seed, MapInit, 1 + k)`
/// for user `k`'s receiver.
pub fn map_from_digital(cfg: &SystemConfig, channels: &ChannelSet, fd: &WmmseOutcome, mcfg: &MapConfig, seed: u64) -> Result<MapOutcome> {
    let phases = cfg.phase_set();
    let d = cfg.streams_per_user;
    let target = hstack(&fd.state.v);
    let rf0 = rng::random_phase_matrix(&mut rng::stream(seed, Domain::MapInit, 0), cfg.num_tx_antennas, cfg.num_tx_rf);
    let precoder = factorize(&target, rf0, &phases, mcfg)?;

    let decoders = par::map_range(Execution::Parallel, cfg.num_users, |k| {
        let mut r = rng::stream(seed, Domain::MapInit, 1 + k as u64);
        let u0 = rng::random_phase_matrix(&mut r, cfg.num_rx_antennas, cfg.num_rx_rf);
        factorize(&fd.state.u[k], u0, &phases, mcfg)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let v_bb = (0..cfg.num_users).map(|k| precoder.bb.columns(k * d, d).into_owned()).collect();
    let mut hybrid = HybridState {
        v_rf: precoder.rf.clone(),
        v_bb,
        u_rf: decoders.iter().map(|f| f.rf.clone()).collect(),
        u_bb: decoders.iter().map(|f| f.bb.clone()).collect(),
    };
    let p = hybrid.transmit_power();
    let power_scale = if p > 0.0 { (cfg.power / p).sqrt() } else { 1.0 };
    for b in &mut hybrid.v_bb {
        b.scale_mut(power_scale);
    }
    let rate = spectral_efficiency(cfg, channels, &hybrid);
    Ok(MapOutcome { hybrid, rate, precoder, decoders, power_scale })
}

/// Fully-digital WMMSE followed by the hybrid factorization.
pub fn map_solve(cfg: &SystemConfig, channels: &ChannelSet, wcfg: &WmmseConfig, mcfg: &MapConfig, seed: u64) -> Result<(MapOutcome, WmmseOutcome)> {
    let fd = wmmse_solve(cfg, channels, wcfg, seed)?;
    let out = map_from_digital(cfg, channels, &fd, mcfg, seed)?;
    Ok((out, fd))
}
