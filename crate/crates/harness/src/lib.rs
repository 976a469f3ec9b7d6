//! Experiment harness for the hybrid precoding solvers: TOML experiment
//! specs, seeded Monte-Carlo runs and CSV output.

pub mod experiments;
pub mod runner;
pub mod spec;

pub use runner::{execute, run_experiment, ResultRow, RunError, RunOutput, SummaryRow};
pub use spec::{parse_spec, parse_spec_str, ExperimentSpec, Method, SpecError, SystemTemplate};
