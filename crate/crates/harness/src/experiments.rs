//! Preset experiments built on [`crate::runner`].

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use hbf_core::format::sig12;
use hbf_core::PhaseResolution;

use crate::runner::{RunOutput, SummaryRow};
use crate::spec::{ExperimentSpec, Method, SystemTemplate};

/// User/stream combinations of the minimal-RF relative-performance table.
pub const TABLE_CELLS: [(usize, usize); 5] = [(2, 2), (4, 2), (2, 4), (2, 3), (3, 2)];

pub const TABLE_BITS: [PhaseResolution; 3] = [PhaseResolution::Infinite, PhaseResolution::Bits(4), PhaseResolution::Bits(2)];

/// 64 x 16 arrays with the minimum RF chains `N_RF = K d`, `M_RF = d`, at 0 dB.
pub fn minimal_rf_spec(users: usize, streams: usize, num_channels: usize) -> ExperimentSpec {
    let system = SystemTemplate {
        num_tx_antennas: 64,
        num_rx_antennas: 16,
        num_tx_rf: users * streams,
        num_rx_rf: streams,
        num_users: users,
        streams_per_user: streams,
        noise_variance: 1.0,
    };
    let mut spec = ExperimentSpec::new(system, vec![0.0], vec![Method::Fd, Method::Pdd], num_channels);
    spec.bits_list = TABLE_BITS.to_vec();
    spec.output_dir = format!("results/minimal_rf/K{users}_d{streams}").into();
    spec
}

/// Rows of the relative-performance table: one line per `(K, d)` cell and
/// resolution with min / avg / max percentages of the PDD rows.
pub fn table_lines(cells: &[((usize, usize), Vec<SummaryRow>)]) -> String {
    let mut s = String::from("users,streams,bits,min_relative_pct,avg_relative_pct,max_relative_pct\n");
    for ((k, d), summary) in cells {
        for row in summary.iter().filter(|r| r.method == Method::Pdd) {
            let _ = writeln!(
                s,
                "{k},{d},{},{},{},{}",
                row.bits,
                sig12(row.min_relative_pct),
                sig12(row.avg_relative_pct),
                sig12(row.max_relative_pct)
            );
        }
    }
    s
}

/// Channel-averaged PDD convergence per `(snr, bits)`: objective in bps/Hz
/// normalized by the fully-digital rate, and coupling violation. Runs that stop
/// early hold their last value.
pub fn convergence_csv(out: &RunOutput) -> String {
    let mut s = String::from("snr_db,bits,outer_iter,normalized_objective,violation\n");
    let mut groups: Vec<(f64, PhaseResolution)> = out.pdd_reports.iter().map(|(r, _)| (r.snr_db, r.bits)).collect();
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    groups.dedup();
    for (snr, bits) in groups {
        let runs: Vec<_> = out.pdd_reports.iter().filter(|(r, _)| r.snr_db == snr && r.bits == bits).collect();
        let len = runs.iter().map(|(_, rep)| rep.records.len()).max().unwrap_or(0);
        for i in 0..len {
            let (mut obj, mut viol) = (0.0, 0.0);
            for (row, rep) in &runs {
                let rec = &rep.records[i.min(rep.records.len() - 1)];
                obj += rec.objective_nats / LN_2 / row.fd_rate_bpshz;
                viol += rec.violation;
            }
            let n = runs.len() as f64;
            let _ = writeln!(s, "{},{bits},{},{},{}", sig12(snr), i + 1, sig12(obj / n), sig12(viol / n));
        }
    }
    s
}

/// Parses a comma-separated list such as `1,2,inf`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_rf_specs_validate() {
        for (k, d) in TABLE_CELLS {
            let spec = minimal_rf_spec(k, d, 3);
            spec.validate().unwrap();
            assert_eq!(spec.system.num_tx_rf, k * d);
            assert_eq!(spec.system.num_rx_rf, d);
        }
    }

    #[test]
    fn list_parsing() {
        let bits: Vec<PhaseResolution> = parse_list("1, 2,inf").unwrap();
        assert_eq!(bits, vec![PhaseResolution::Bits(1), PhaseResolution::Bits(2), PhaseResolution::Infinite]);
        assert!(parse_list::<usize>("4,x").is_err());
    }
}
