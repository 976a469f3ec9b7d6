//! Monte-Carlo execution of an [`ExperimentSpec`] and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hbf_core::format::sig12;
use hbf_core::map::map_from_digital;
use hbf_core::par::{self, Execution};
use hbf_core::pdd::{pdd_solve, quantized_pdd_solve, PddReport};
use hbf_core::{generate_channels, wmmse_solve, ChannelSet, PhaseResolution};
use thiserror::Error;

use crate::spec::{ExperimentSpec, Method};

/// Overrides the spec's `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "HBF_OUTPUT_DIR";

pub const RESULTS_HEADER: &str =
    "method,snr_db,bits,channel_index,rate_bpshz,fd_rate_bpshz,relative_pct,outer_iters,final_violation";
pub const SUMMARY_HEADER: &str =
    "method,snr_db,bits,num_channels,min_relative_pct,avg_relative_pct,max_relative_pct,avg_rate_bpshz,avg_fd_rate_bpshz";
pub const TIMINGS_HEADER: &str = "method,snr_db,bits,channel_index,wall_time_s";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{method} failed on channel {channel} at {snr_db} dB, bits {bits}: {source}")]
    Solver {
        method: Method,
        channel: usize,
        snr_db: f64,
        bits: PhaseResolution,
        source: hbf_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Spec(#[from] crate::spec::SpecError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub snr_db: f64,
    pub bits: PhaseResolution,
    pub channel_index: usize,
    pub rate_bpshz: f64,
    pub fd_rate_bpshz: f64,
    pub relative_pct: f64,
    /// Outer iterations (PDD), cycles (WMMSE) or alternations (MAP).
    pub outer_iters: usize,
    /// Final coupling violation for PDD runs, 0 otherwise.
    pub final_violation: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            sig12(self.snr_db),
            self.bits,
            self.channel_index,
            sig12(self.rate_bpshz),
            sig12(self.fd_rate_bpshz),
            sig12(self.relative_pct),
            self.outer_iters,
            sig12(self.final_violation)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub snr_db: f64,
    pub bits: PhaseResolution,
    pub num_channels: usize,
    pub min_relative_pct: f64,
    pub avg_relative_pct: f64,
    pub max_relative_pct: f64,
    pub avg_rate_bpshz: f64,
    pub avg_fd_rate_bpshz: f64,
}

impl SummaryRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            sig12(self.snr_db),
            self.bits,
            self.num_channels,
            sig12(self.min_relative_pct),
            sig12(self.avg_relative_pct),
            sig12(self.max_relative_pct),
            sig12(self.avg_rate_bpshz),
            sig12(self.avg_fd_rate_bpshz)
        )
    }
}

/// Per-run convergence trace, written to `traces/<name>.csv`.
#[derive(Clone, Debug)]
pub struct Trace {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub traces: Vec<Trace>,
    /// Full PDD reports keyed like the rows (PDD method only).
    pub pdd_reports: Vec<(ResultRow, PddReport)>,
}

pub fn relative_pct(rate: f64, fd_rate: f64) -> f64 {
    if fd_rate > 0.0 {
        100.0 * (rate / fd_rate)
    } else {
        f64::NAN
    }
}

fn trace_name(method: Method, snr_db: f64, bits: PhaseResolution, channel: usize) -> String {
    format!("{method}_snr{}_bits{bits}_ch{channel}", sig12(snr_db))
}

fn pdd_trace(report: &PddReport) -> String {
    let mut buf = Vec::new();
    report.write_trace(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

fn series_trace(header: &str, values: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", sig12(*v));
    }
    s
}

struct ChannelOutput {
    rows: Vec<ResultRow>,
    traces: Vec<Trace>,
    pdd_reports: Vec<(ResultRow, PddReport)>,
}

fn methods_of(spec: &ExperimentSpec) -> Vec<Method> {
    let mut m = spec.methods.clone();
    m.sort();
    m.dedup();
    m
}

fn run_channel(spec: &ExperimentSpec, channel: usize) -> Result<ChannelOutput, RunError> {
    let seed = spec.base_seed.wrapping_add(channel as u64);
    let methods = methods_of(spec);
    let mut out = ChannelOutput { rows: Vec::new(), traces: Vec::new(), pdd_reports: Vec::new() };
    let mut channels: Option<ChannelSet> = None;

    for &snr_db in &spec.snr_db_list {
        let fail = |method, bits| move |source| RunError::Solver { method, channel, snr_db, bits, source };
        let cfg_inf = spec
            .system
            .instantiate(snr_db, PhaseResolution::Infinite)
            .map_err(fail(Method::Fd, PhaseResolution::Infinite))?;
        // the channel does not depend on power or phase resolution
        let ch = channels.get_or_insert_with(|| generate_channels(&cfg_inf, spec.num_paths, seed));

        let t = Instant::now();
        let fd = wmmse_solve(&cfg_inf, ch, &spec.wmmse, seed).map_err(fail(Method::Fd, PhaseResolution::Infinite))?;
        let fd_time = t.elapsed().as_secs_f64();

        for &bits in &spec.bits_list {
            let cfg = spec.system.instantiate(snr_db, bits).map_err(fail(Method::Fd, bits))?;
            for &method in &methods {
                let row = |rate: f64, outer_iters: usize, final_violation: f64, wall_time_s: f64| ResultRow {
                    method,
                    snr_db,
                    bits,
                    channel_index: channel,
                    rate_bpshz: rate,
                    fd_rate_bpshz: fd.rate,
                    relative_pct: relative_pct(rate, fd.rate),
                    outer_iters,
                    final_violation,
                    wall_time_s,
                };
                let name = trace_name(method, snr_db, bits, channel);
                let t = Instant::now();
                match method {
                    Method::Fd => {
                        out.rows.push(row(fd.rate, fd.iterations, 0.0, fd_time));
                        out.traces.push(Trace { name, csv: series_trace("iteration,rate_bpshz", &fd.trace) });
                    }
                    Method::Map => {
                        if bits.is_finite() && !spec.map_finite {
                            continue;
                        }
                        let m = map_from_digital(&cfg, ch, &fd, &spec.map, seed).map_err(fail(method, bits))?;
                        let elapsed = t.elapsed().as_secs_f64() + fd_time;
                        out.rows.push(row(m.rate, m.precoder.alternations, 0.0, elapsed));
                        out.traces.push(Trace { name, csv: series_trace("alternation,approximation_error", &m.precoder.trace) });
                    }
                    Method::Pdd | Method::PddQuantizeThenRound => {
                        let solve = if method == Method::Pdd { pdd_solve } else { quantized_pdd_solve };
                        let (_, report) = solve(&cfg, ch, &spec.pdd, seed).map_err(fail(method, bits))?;
                        let r = row(report.final_rate, report.outer_iters(), report.final_violation, t.elapsed().as_secs_f64());
                        out.traces.push(Trace { name, csv: pdd_trace(&report) });
                        out.rows.push(r.clone());
                        if method == Method::Pdd {
                            out.pdd_reports.push((r, report));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.bits.cmp(&b.bits))
            .then(a.channel_index.cmp(&b.channel_index))
    });
}

/// Min / mean / max of `relative_pct` per `(method, snr, bits)` over channels.
/// Expects rows sorted as in `results.csv`.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let head = &rows[start];
        let mut end = start;
        while end < rows.len() && rows[end].method == head.method && rows[end].snr_db == head.snr_db && rows[end].bits == head.bits {
            end += 1;
        }
        let cell = &rows[start..end];
        let n = cell.len() as f64;
        let rel: Vec<f64> = cell.iter().map(|r| r.relative_pct).collect();
        let summary = SummaryRow {
            method: head.method,
            snr_db: head.snr_db,
            bits: head.bits,
            num_channels: cell.len(),
            min_relative_pct: rel.iter().cloned().fold(f64::INFINITY, f64::min),
            avg_relative_pct: rel.iter().sum::<f64>() / n,
            max_relative_pct: rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            avg_rate_bpshz: cell.iter().map(|r| r.rate_bpshz).sum::<f64>() / n,
            avg_fd_rate_bpshz: cell.iter().map(|r| r.fd_rate_bpshz).sum::<f64>() / n,
        };
        out.push(summary);
        start = end;
    }
    out
}

/// Runs every `(channel, SNR, bits, method)` cell; channels are processed in
/// parallel under [`Execution::Parallel`]. The result does not depend on `exec`.
pub fn execute(spec: &ExperimentSpec, exec: Execution) -> Result<RunOutput, RunError> {
    spec.validate()?;
    let per_channel = par::map_range(exec, spec.num_channels, |c| run_channel(spec, c));
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut pdd_reports = Vec::new();
    for r in per_channel {
        let r = r?;
        rows.extend(r.rows);
        traces.extend(r.traces);
        pdd_reports.extend(r.pdd_reports);
    }
    sort_rows(&mut rows);
    traces.sort_by(|a, b| a.name.cmp(&b.name));
    let summary = summarize(&rows);
    Ok(RunOutput { rows, summary, traces, pdd_reports })
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Wall-clock times live in their own file so `results.csv` stays reproducible.
pub fn timings_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{TIMINGS_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{:.6}", r.method, sig12(r.snr_db), r.bits, r.channel_index, r.wall_time_s);
    }
    s
}

/// Output directory: `$HBF_OUTPUT_DIR` when set and non-empty, else the spec's.
pub fn resolve_output_dir(spec: &ExperimentSpec) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => spec.output_dir.clone(),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Writes `results.csv`, `summary.csv`, `timings.csv`, `spec.toml` and, when
/// enabled, `traces/*.csv` under `dir`.
pub fn write_outputs(spec: &ExperimentSpec, out: &RunOutput, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    write(&dir.join("results.csv"), &results_csv(&out.rows))?;
    write(&dir.join("summary.csv"), &summary_csv(&out.summary))?;
    write(&dir.join("timings.csv"), &timings_csv(&out.rows))?;
    write(&dir.join("spec.toml"), &spec.to_toml())?;
    if spec.write_traces {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir).map_err(|source| RunError::Io { path: tdir.clone(), source })?;
        for t in &out.traces {
            write(&tdir.join(format!("{}.csv", t.name)), &t.csv)?;
        }
    }
    Ok(())
}

/// [`execute`] followed by [`write_outputs`] into [`resolve_output_dir`].
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<(RunOutput, PathBuf), RunError> {
    let out = execute(spec, exec)?;
    let dir = resolve_output_dir(spec);
    write_outputs(spec, &out, &dir)?;
    Ok((out, dir))
}
