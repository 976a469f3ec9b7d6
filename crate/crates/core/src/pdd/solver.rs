use std::f64::consts::LN_2;

use crate::error::Result;
use crate::linalg::{frob_sq, logdet_hpd, pinv, CMat};
use crate::model::{spectral_efficiency, ChannelSet, HybridState, PhaseResolution, SystemConfig};
use crate::rng::{self, Domain};
use crate::unit_modulus::{quantize_nearest, PhaseSet, SweepOptions, SweepOrder};

use super::blocks::{update_ubb, update_urf, update_vbb, update_vrf, update_w, update_x, SubproblemWorkspace};
use super::report::{OuterRecord, PddReport, PddStatus};
use super::{aug_lagrangian_value, constraint_violation, PddConfig, PddState};

/// Block just updated, passed to inner-loop observers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    ReceiveBaseband,
    Weights,
    TransmitRf,
    ReceiveRf,
    TransmitBaseband,
    Auxiliary,
}

#[derive(Clone, Debug)]
pub struct InnerOutcome {
    pub cycles: usize,
    pub objective: f64,
    pub converged: bool,
    /// Augmented Lagrangian before the first cycle and after each cycle.
    pub trace: Vec<f64>,
}

/// Feasible random start.
///
/// Draw order on stream `(seed, PddInit, 0)`: `V_RF` phases (column-major), then
/// every `U_RF_k`, then every `V_BB_k` (complex Gaussian). `V_BB` is scaled to
/// full power, `X = V_RF V_BB`, `Y = 0`, and `U_BB`, `W` take their closed forms.
/// RF phases are snapped to `phases` when it is finite.
pub fn initialize(cfg: &SystemConfig, channels: &ChannelSet, pdd: &PddConfig, seed: u64, phases: &PhaseSet) -> Result<PddState> {
    cfg.validate()?;
    let (n, m, n_rf, m_rf, k, d) = (
        cfg.num_tx_antennas,
        cfg.num_rx_antennas,
        cfg.num_tx_rf,
        cfg.num_rx_rf,
        cfg.num_users,
        cfg.streams_per_user,
    );
    let mut rng = rng::stream(seed, Domain::PddInit, 0);
    let v_rf = quantize_nearest(&rng::random_phase_matrix(&mut rng, n, n_rf), phases);
    let u_rf: Vec<CMat> = (0..k)
        .map(|_| quantize_nearest(&rng::random_phase_matrix(&mut rng, m, m_rf), phases))
        .collect();
    let mut v_bb: Vec<CMat> = (0..k).map(|_| rng::gaussian_matrix(&mut rng, n_rf, d)).collect();
    let power: f64 = v_bb.iter().map(|b| frob_sq(&(&v_rf * b))).sum();
    let scale = (cfg.power / power).sqrt();
    for b in &mut v_bb {
        b.scale_mut(scale);
    }
    let x: Vec<CMat> = v_bb.iter().map(|b| &v_rf * b).collect();
    let ws = SubproblemWorkspace::new(cfg, channels, &x);
    let mut u_bb = Vec::with_capacity(k);
    let mut w = Vec::with_capacity(k);
    for user in 0..k {
        let ubb = update_ubb(&ws.a_k[user], &channels.h[user], &u_rf[user], &x[user]);
        w.push(update_w(&channels.h[user], &u_rf[user], &ubb, &x[user], user)?);
        u_bb.push(ubb);
    }
    Ok(PddState {
        hybrid: HybridState { v_rf, v_bb, u_rf, u_bb },
        y: vec![CMat::zeros(n, d); k],
        x,
        w,
        rho: pdd.initial_rho(n),
        eta: pdd.eta0,
        eps: pdd.eps0,
        outer_iter: 0,
    })
}

fn sweep_options(pdd: &PddConfig, seed: u64, counter: &mut u64) -> SweepOptions {
    let order = if pdd.random_sweep_order {
        *counter += 1;
        SweepOrder::Random { seed: seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(*counter) }
    } else {
        SweepOrder::RowMajor
    };
    SweepOptions { max_sweeps: pdd.rf_sweeps, rel_tol: 1e-8, order }
}

pub fn inner_bcd(cfg: &SystemConfig, channels: &ChannelSet, st: &mut PddState, pdd: &PddConfig, phases: &PhaseSet) -> Result<InnerOutcome> {
    inner_bcd_observed(cfg, channels, st, pdd, phases, 0, |_, _| {})
}

/// Inner BCD loop; `observer` sees the state after every block update.
///
/// One cycle is `U_BB -> W -> V_RF -> U_RF -> V_BB -> X`. Stops when the relative
/// change of the augmented Lagrangian is at most `st.eps` (absolute when the
/// value is below 1e-12 in magnitude) or after `max_inner` cycles.
pub fn inner_bcd_observed<F>(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    st: &mut PddState,
    pdd: &PddConfig,
    phases: &PhaseSet,
    seed: u64,
    mut observer: F,
) -> Result<InnerOutcome>
where
    F: FnMut(Block, &PddState),
{
    let k_users = cfg.num_users;
    let mut prev = aug_lagrangian_value(cfg, channels, st)?;
    let mut trace = vec![prev];
    let mut ws = SubproblemWorkspace::new(cfg, channels, &st.x);
    let mut sweep_counter = (st.outer_iter as u64) << 20;
    let mut converged = false;
    let mut cycles = 0;

    while cycles < pdd.max_inner {
        cycles += 1;
        for k in 0..k_users {
            st.hybrid.u_bb[k] = update_ubb(&ws.a_k[k], &channels.h[k], &st.hybrid.u_rf[k], &st.x[k]);
        }
        observer(Block::ReceiveBaseband, st);

        for k in 0..k_users {
            st.w[k] = update_w(&channels.h[k], &st.hybrid.u_rf[k], &st.hybrid.u_bb[k], &st.x[k], k)?;
        }
        observer(Block::Weights, st);

        let opts = sweep_options(pdd, seed, &mut sweep_counter);
        st.hybrid.v_rf = update_vrf(st, phases, &opts)?.x;
        observer(Block::TransmitRf, st);

        for k in 0..k_users {
            let opts = sweep_options(pdd, seed, &mut sweep_counter);
            st.hybrid.u_rf[k] = update_urf(&ws.a_k[k], channels, st, k, phases, &opts)?.x;
        }
        observer(Block::ReceiveRf, st);

        for k in 0..k_users {
            let z = &st.x[k] + st.y[k].scale(st.rho);
            st.hybrid.v_bb[k] = update_vbb(&st.hybrid.v_rf, &z);
        }
        observer(Block::TransmitBaseband, st);

        st.x = update_x(cfg, channels, st).x;
        ws.refresh(cfg, channels, &st.x);
        observer(Block::Auxiliary, st);

        let cur = aug_lagrangian_value(cfg, channels, st)?;
        trace.push(cur);
        let change = (cur - prev).abs();
        let done = if prev.abs() < 1e-12 { change <= st.eps } else { change / prev.abs() <= st.eps };
        prev = cur;
        if done {
            converged = true;
            break;
        }
    }
    Ok(InnerOutcome { cycles, objective: prev, converged, trace })
}

pub fn pdd_solve(cfg: &SystemConfig, channels: &ChannelSet, pdd: &PddConfig, seed: u64) -> Result<(HybridState, PddReport)> {
    pdd.validate()?;
    let warm = cfg.phase_bits.is_finite() && pdd.finite_warmstart_iters > 0;
    let start_phases = if warm { PhaseSet::Infinite } else { cfg.phase_set() };
    let st = initialize(cfg, channels, pdd, seed, &start_phases)?;
    pdd_solve_from(cfg, channels, pdd, st, seed)
}

/// Outer loop from a given state. In finite-resolution mode the first
/// `finite_warmstart_iters` outer iterations (counted from `st.outer_iter`)
/// use continuous phases; the analog matrices are then snapped to the phase
/// set and the loop continues with `rho` untouched.
pub fn pdd_solve_from(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    pdd: &PddConfig,
    mut st: PddState,
    seed: u64,
) -> Result<(HybridState, PddReport)> {
    cfg.validate()?;
    pdd.validate()?;
    let final_phases = cfg.phase_set();
    let finite = final_phases.is_finite();
    let mut switched = !finite || pdd.finite_warmstart_iters == 0;
    let switch_at = st.outer_iter + pdd.finite_warmstart_iters;
    if switched && finite {
        snap_rf(&mut st, &final_phases);
    }
    let mut records = Vec::new();
    let mut status = PddStatus::MaxOuterReached;

    for _ in 0..pdd.max_outer {
        if !switched && st.outer_iter >= switch_at {
            snap_rf(&mut st, &final_phases);
            switched = true;
        }
        let active = if switched { final_phases.clone() } else { PhaseSet::Infinite };
        st.outer_iter += 1;
        let rho_used = st.rho;
        let inner = inner_bcd_observed(cfg, channels, &mut st, pdd, &active, seed, |_, _| {})?;
        let violation = constraint_violation(&st);

        let mut feasible = st.hybrid.clone();
        feasible.enforce_power(cfg.power);
        records.push(OuterRecord {
            outer_iter: st.outer_iter,
            objective_nats: inner.objective,
            violation,
            rho: rho_used,
            rate_bpshz: spectral_efficiency(cfg, channels, &feasible),
            inner_cycles: inner.cycles,
            finite_phases: switched && finite,
        });

        if violation <= pdd.eps_outer && switched {
            status = PddStatus::Converged;
            break;
        }
        if violation <= st.eta {
            let residuals = st.coupling_residuals();
            for (y, r) in st.y.iter_mut().zip(&residuals) {
                *y += r.scale(1.0 / st.rho);
            }
        } else {
            st.rho *= pdd.c;
        }
        st.eta = (pdd.eta_factor * violation).max(pdd.eps_outer);
        st.eps *= pdd.c;
    }

    let mut hybrid = st.hybrid.clone();
    let power_scale = hybrid.enforce_power(cfg.power);
    let final_rate = spectral_efficiency(cfg, channels, &hybrid);
    let weighted_log2det = refresh_receivers(cfg, channels, &mut hybrid).unwrap_or(f64::NAN);
    let final_violation = constraint_violation(&st);
    let report = PddReport { records, status, final_rate, final_violation, weighted_log2det, power_scale, final_state: st };
    Ok((hybrid, report))
}

fn snap_rf(st: &mut PddState, phases: &PhaseSet) {
    st.hybrid.v_rf = quantize_nearest(&st.hybrid.v_rf, phases);
    for u in &mut st.hybrid.u_rf {
        *u = quantize_nearest(u, phases);
    }
}

/// Replaces every `U_BB_k` by the MMSE combiner of the effective precoders
/// `V_RF V_BB_k` and returns `sum_k log2 det W_k` at that point.
fn refresh_receivers(cfg: &SystemConfig, channels: &ChannelSet, hybrid: &mut HybridState) -> Result<f64> {
    let x = hybrid.precoders();
    let ws = SubproblemWorkspace::new(cfg, channels, &x);
    let mut total = 0.0;
    for k in 0..cfg.num_users {
        let u_rf = &hybrid.u_rf[k];
        let ubb = update_ubb(&ws.a_k[k], &channels.h[k], u_rf, &x[k]);
        let w = update_w(&channels.h[k], u_rf, &ubb, &x[k], k)?;
        total += logdet_hpd(&w).unwrap_or(f64::NAN);
        hybrid.u_bb[k] = ubb;
    }
    Ok(total / LN_2)
}

/// Continuous-phase PDD followed by nearest-point quantization of the analog
/// matrices; `V_BB_k` is refit by least squares to the continuous-phase
/// precoder `V_RF V_BB_k` and rescaled to the power budget.
pub fn quantized_pdd_solve(cfg: &SystemConfig, channels: &ChannelSet, pdd: &PddConfig, seed: u64) -> Result<(HybridState, PddReport)> {
    let phases = cfg.phase_set();
    let continuous = cfg.clone().with_phase_bits(PhaseResolution::Infinite);
    let (hybrid, mut report) = pdd_solve(&continuous, channels, pdd, seed)?;
    if !phases.is_finite() {
        return Ok((hybrid, report));
    }
    let v_rf = quantize_nearest(&hybrid.v_rf, &phases);
    let v_rf_pinv = pinv(&v_rf);
    let v_bb = hybrid.v_bb.iter().map(|b| &v_rf_pinv * (&hybrid.v_rf * b)).collect();
    let u_rf = hybrid.u_rf.iter().map(|u| quantize_nearest(u, &phases)).collect();
    let mut quantized = HybridState { v_rf, v_bb, u_rf, u_bb: hybrid.u_bb.clone() };
    report.power_scale = quantized.enforce_power(cfg.power);
    report.weighted_log2det = refresh_receivers(cfg, channels, &mut quantized).unwrap_or(f64::NAN);
    report.final_rate = spectral_efficiency(cfg, channels, &quantized);
    Ok((quantized, report))
}
