//! System configuration, geometric channels, and the rate / MSE formulas shared
//! by every solver.

mod channel;
pub mod io;
mod rate;

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub use channel::{array_response, generate_channels, ChannelSet, Path, PathParams};
pub use rate::{
    interference_cov, mse_matrix, spectral_efficiency, spectral_efficiency_digital,
    spectral_efficiency_report, RateReport,
};

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, CMat};
use crate::unit_modulus::PhaseSet;

/// Largest supported finite phase resolution.
pub const MAX_PHASE_BITS: u32 = 16;

/// Phase-shifter resolution: continuous phases or `2^b` uniformly spaced phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseResolution {
    Bits(u32),
    Infinite,
}

impl PhaseResolution {
    pub fn is_finite(self) -> bool {
        matches!(self, PhaseResolution::Bits(_))
    }
}

impl fmt::Display for PhaseResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseResolution::Infinite => f.write_str("inf"),
            PhaseResolution::Bits(b) => write!(f, "{b}"),
        }
    }
}

impl std::str::FromStr for PhaseResolution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinite" | "∞" => Ok(PhaseResolution::Infinite),
            other => match other.parse::<u32>() {
                Ok(b) if b >= 1 => Ok(PhaseResolution::Bits(b)),
                _ => Err(format!("expected \"infinite\" or an integer >= 1, got {other:?}")),
            },
        }
    }
}

impl Serialize for PhaseResolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseResolution::Infinite => s.serialize_str("infinite"),
            PhaseResolution::Bits(b) => s.serialize_u32(*b),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseResolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = PhaseResolution;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"infinite\" or an integer number of bits >= 1")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                if (1..=i64::from(u32::MAX)).contains(&v) {
                    Ok(PhaseResolution::Bits(v as u32))
                } else {
                    Err(E::custom(format!("phase bits must be >= 1, got {v}")))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_i64(v.min(i64::MAX as u64) as i64)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub num_tx_rf: usize,
    pub num_rx_rf: usize,
    pub num_users: usize,
    pub streams_per_user: usize,
    /// Transmit power budget (linear).
    pub power: f64,
    pub noise_variance: f64,
    pub phase_bits: PhaseResolution,
}

impl SystemConfig {
    /// Unit power and noise, continuous phases.
    pub fn new(n: usize, m: usize, n_rf: usize, m_rf: usize, k: usize, d: usize) -> Result<Self> {
        let cfg = Self {
            num_tx_antennas: n,
            num_rx_antennas: m,
            num_tx_rf: n_rf,
            num_rx_rf: m_rf,
            num_users: k,
            streams_per_user: d,
            power: 1.0,
            noise_variance: 1.0,
            phase_bits: PhaseResolution::Infinite,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn with_noise(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn with_phase_bits(mut self, bits: PhaseResolution) -> Self {
        self.phase_bits = bits;
        self
    }

    /// Sets the power budget from an SNR in dB at the configured noise variance.
    pub fn with_snr_db(self, snr_db: f64) -> Self {
        let p = snr_to_power(snr_db, self.noise_variance);
        self.with_power(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let dims = [
            ("num_tx_antennas", self.num_tx_antennas),
            ("num_rx_antennas", self.num_rx_antennas),
            ("num_tx_rf", self.num_tx_rf),
            ("num_rx_rf", self.num_rx_rf),
            ("num_users", self.num_users),
            ("streams_per_user", self.streams_per_user),
        ];
        for (name, v) in dims {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.num_tx_rf > self.num_tx_antennas {
            return bad(format!("N_RF = {} exceeds N = {}", self.num_tx_rf, self.num_tx_antennas));
        }
        if self.num_rx_rf > self.num_rx_antennas {
            return bad(format!("M_RF = {} exceeds M = {}", self.num_rx_rf, self.num_rx_antennas));
        }
        let d = self.streams_per_user;
        if d * self.num_users > self.num_tx_rf || d > self.num_rx_rf {
            return bad(format!(
                "d = {d} violates d <= min(N_RF / K, M_RF) with N_RF = {}, K = {}, M_RF = {}",
                self.num_tx_rf, self.num_users, self.num_rx_rf
            ));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad(format!("power budget must be positive and finite, got {}", self.power));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return bad(format!("noise variance must be positive, got {}", self.noise_variance));
        }
        if let PhaseResolution::Bits(b) = self.phase_bits {
            if !(1..=MAX_PHASE_BITS).contains(&b) {
                return bad(format!("phase bits must be in 1..={MAX_PHASE_BITS}, got {b}"));
            }
        }
        Ok(())
    }

    pub fn phase_set(&self) -> PhaseSet {
        PhaseSet::from_resolution(self.phase_bits)
    }
}

/// `P = sigma^2 * 10^(snr_db / 10)`.
pub fn snr_to_power(snr_db: f64, noise_variance: f64) -> f64 {
    noise_variance * 10f64.powf(snr_db / 10.0)
}

/// Analog and digital precoders/combiners of a hybrid transceiver.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    /// `N x N_RF`, unit-modulus entries.
    pub v_rf: CMat,
    /// Per user `N_RF x d`.
    pub v_bb: Vec<CMat>,
    /// Per user `M x M_RF`, unit-modulus entries.
    pub u_rf: Vec<CMat>,
    /// Per user `M_RF x d`.
    pub u_bb: Vec<CMat>,
}

impl HybridState {
    /// Effective per-user precoders `V_RF V_BB_k`.
    pub fn precoders(&self) -> Vec<CMat> {
        self.v_bb.iter().map(|b| &self.v_rf * b).collect()
    }

    pub fn transmit_power(&self) -> f64 {
        self.precoders().iter().map(frob_sq).sum()
    }

    /// Scales every `V_BB_k` by `sqrt(P / power)` when the budget is exceeded.
    /// Returns the applied factor.
    pub fn enforce_power(&mut self, budget: f64) -> f64 {
        let p = self.transmit_power();
        if p <= budget || p == 0.0 {
            return 1.0;
        }
        let beta = (budget / p).sqrt();
        for b in &mut self.v_bb {
            b.scale_mut(beta);
        }
        beta
    }

    /// Checks dimensions against `cfg` and the phase constraints of every RF entry.
    pub fn check(&self, cfg: &SystemConfig, phases: &PhaseSet, tol: f64) -> Result<()> {
        let (n, m) = (cfg.num_tx_antennas, cfg.num_rx_antennas);
        let (n_rf, m_rf, k, d) = (cfg.num_tx_rf, cfg.num_rx_rf, cfg.num_users, cfg.streams_per_user);
        let shape_err = |what: &str| Err(Error::Dimension(format!("hybrid state: {what}")));
        if self.v_rf.shape() != (n, n_rf) {
            return shape_err("V_RF");
        }
        if self.v_bb.len() != k || self.u_rf.len() != k || self.u_bb.len() != k {
            return shape_err("user count");
        }
        for u in 0..k {
            if self.v_bb[u].shape() != (n_rf, d) {
                return shape_err("V_BB");
            }
            if self.u_rf[u].shape() != (m, m_rf) {
                return shape_err("U_RF");
            }
            if self.u_bb[u].shape() != (m_rf, d) {
                return shape_err("U_BB");
            }
        }
        phases.check_feasible(&self.v_rf, tol)?;
        for u in &self.u_rf {
            phases.check_feasible(u, tol)?;
        }
        Ok(())
    }
}
