use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hbf_core::par::Execution;
use hbf_core::PhaseResolution;
use hbf_harness::experiments::{convergence_csv, minimal_rf_spec, parse_list, table_lines, TABLE_CELLS};
use hbf_harness::runner::{execute, resolve_output_dir, summary_csv, write_outputs, OUTPUT_DIR_ENV, SUMMARY_HEADER};
use hbf_harness::{parse_spec, ExperimentSpec, Method, RunOutput};

#[derive(Parser)]
#[command(name = "hbf", version, about = "Hybrid precoding Monte-Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides the spec and HBF_OUTPUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Process channels one at a time.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn dir(&self, spec: &ExperimentSpec) -> PathBuf {
        self.out.clone().unwrap_or_else(|| resolve_output_dir(spec))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write results.csv, summary.csv and traces.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal-RF relative performance table at 0 dB for five (K, d) cells.
    MinimalRf {
        /// Channel realizations per cell.
        #[arg(long, default_value_t = 20)]
        channels: usize,
        /// Use 100 realizations per cell.
        #[arg(long, conflicts_with = "channels")]
        full: bool,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// PDD convergence traces averaged over channels (objective and violation).
    Converge {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rerun a spec over several phase resolutions.
    SweepBits {
        spec: PathBuf,
        /// Comma-separated list, e.g. `1,2,3,4,inf`.
        #[arg(long, default_value = "1,2,3,4,inf")]
        bits: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rerun a spec over several transmit RF-chain counts.
    SweepRf {
        spec: PathBuf,
        /// Comma-separated transmit RF-chain counts.
        #[arg(long)]
        num_tx_rf: String,
        #[command(flatten)]
        common: Common,
    },
}

fn run_and_write(spec: &ExperimentSpec, dir: &Path, exec: Execution) -> Result<RunOutput> {
    let out = execute(spec, exec)?;
    write_outputs(spec, &out, dir)?;
    Ok(out)
}

fn print_summary(out: &RunOutput) {
    print!("{}", summary_csv(&out.summary));
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, common } => {
            let spec = parse_spec(&spec)?;
            let dir = common.dir(&spec);
            let out = run_and_write(&spec, &dir, common.exec())?;
            print_summary(&out);
            eprintln!("wrote {}", dir.display());
        }
        Command::MinimalRf { channels, full, base_seed, common } => {
            let channels = if full { 100 } else { channels };
            if channels == 0 {
                bail!("--channels must be at least 1");
            }
            let root = common.out.clone().unwrap_or_else(|| match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(v) if !v.is_empty() => PathBuf::from(v),
                _ => PathBuf::from("results/minimal_rf"),
            });
            let mut cells = Vec::new();
            for (k, d) in TABLE_CELLS {
                let mut spec = minimal_rf_spec(k, d, channels);
                spec.base_seed = base_seed;
                let dir = root.join(format!("K{k}_d{d}"));
                let out = run_and_write(&spec, &dir, common.exec())?;
                eprintln!("K={k} d={d} done");
                cells.push(((k, d), out.summary));
            }
            let table = table_lines(&cells);
            fs::write(root.join("minimal_rf.csv"), &table).context("writing minimal_rf.csv")?;
            print!("{table}");
        }
        Command::Converge { spec, common } => {
            let mut spec = parse_spec(&spec)?;
            spec.methods = vec![Method::Fd, Method::Pdd];
            spec.write_traces = true;
            let dir = common.dir(&spec);
            let out = run_and_write(&spec, &dir, common.exec())?;
            let csv = convergence_csv(&out);
            fs::write(dir.join("convergence.csv"), &csv).context("writing convergence.csv")?;
            print!("{csv}");
        }
        Command::SweepBits { spec, bits, common } => {
            let mut spec = parse_spec(&spec)?;
            spec.bits_list = parse_list::<PhaseResolution>(&bits).map_err(anyhow::Error::msg)?;
            spec.validate()?;
            let dir = common.dir(&spec);
            let out = run_and_write(&spec, &dir, common.exec())?;
            print_summary(&out);
        }
        Command::SweepRf { spec, num_tx_rf, common } => {
            let base = parse_spec(&spec)?;
            let counts = parse_list::<usize>(&num_tx_rf).map_err(anyhow::Error::msg)?;
            if counts.is_empty() {
                bail!("--num-tx-rf needs at least one value");
            }
            let root = common.dir(&base);
            let mut combined = format!("num_tx_rf,{SUMMARY_HEADER}\n");
            for n_rf in counts {
                let mut spec = base.clone();
                spec.system.num_tx_rf = n_rf;
                spec.validate().with_context(|| format!("num_tx_rf = {n_rf}"))?;
                let out = run_and_write(&spec, &root.join(format!("nrf{n_rf}")), common.exec())?;
                for line in summary_csv(&out.summary).lines().skip(1) {
                    combined.push_str(&format!("{n_rf},{line}\n"));
                }
            }
            fs::create_dir_all(&root)?;
            fs::write(root.join("sweep_rf.csv"), &combined).context("writing sweep_rf.csv")?;
            print!("{combined}");
        }
    }
    Ok(())
}
