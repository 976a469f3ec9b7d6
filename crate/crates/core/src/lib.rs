//! Hybrid analog/digital precoding for downlink multi-user MIMO.
//!
//! * [`model`]: system configuration, geometric channels, rate and MSE formulas.
//! * [`unit_modulus`]: entrywise block coordinate descent for quadratics over
//!   unit-modulus (optionally finite-phase) matrices.
//! * [`pdd`]: penalty dual decomposition solver for the hybrid design.
//! * [`wmmse`]: fully-digital WMMSE baseline.
//! * [`map`]: matrix-approximation hybrid design built on the WMMSE solution.

pub mod error;
pub mod format;
pub mod linalg;
pub mod map;
pub mod model;
pub mod par;
pub mod pdd;
pub mod power;
pub mod rng;
pub mod unit_modulus;
pub mod wmmse;

pub use error::{Error, Result};
pub use model::{generate_channels, snr_to_power, ChannelSet, HybridState, PhaseResolution, SystemConfig};
pub use pdd::{pdd_solve, PddConfig, PddReport};
pub use unit_modulus::PhaseSet;
pub use wmmse::{wmmse_solve, WmmseConfig};

/// Number of propagation paths per user in the default channel model.
pub const DEFAULT_NUM_PATHS: usize = 15;
