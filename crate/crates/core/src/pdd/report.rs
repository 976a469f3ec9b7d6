use std::io::{self, Write};

use crate::format::sig12;

use super::PddState;

pub const TRACE_HEADER: &str = "outer_iter,objective_nats,violation,rho,rate_bpshz";

#[derive(Clone, Debug, PartialEq)]
pub struct OuterRecord {
    pub outer_iter: usize,
    pub objective_nats: f64,
    pub violation: f64,
    /// Penalty parameter used by this iteration's inner loop.
    pub rho: f64,
    /// Rate of the power-feasible hybrid state after this iteration.
    pub rate_bpshz: f64,
    pub inner_cycles: usize,
    pub finite_phases: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PddStatus {
    Converged,
    MaxOuterReached,
}

#[derive(Clone, Debug)]
pub struct PddReport {
    pub records: Vec<OuterRecord>,
    pub status: PddStatus,
    pub final_rate: f64,
    pub final_violation: f64,
    /// `sum_k log2 det W_k` with `U_BB`, `W` recomputed at the returned hybrid state.
    pub weighted_log2det: f64,
    /// Factor applied to `V_BB` to restore power feasibility (1 when untouched).
    pub power_scale: f64,
    pub final_state: PddState,
}

impl PddReport {
    pub fn outer_iters(&self) -> usize {
        self.records.len()
    }

    /// First outer iteration whose violation is at or below `tol`.
    pub fn iters_to_violation(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.violation <= tol).map(|r| r.outer_iter)
    }

    pub fn write_trace<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.outer_iter,
                sig12(r.objective_nats),
                sig12(r.violation),
                sig12(r.rho),
                sig12(r.rate_bpshz)
            )?;
        }
        Ok(())
    }
}
