//! Experiment description, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hbf_core::map::MapConfig;
use hbf_core::{PddConfig, PhaseResolution, SystemConfig, WmmseConfig, DEFAULT_NUM_PATHS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Invalid { field: field.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fd,
    Pdd,
    Map,
    PddQuantizeThenRound,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fd, Method::Pdd, Method::Map, Method::PddQuantizeThenRound];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fd => "fd",
            Method::Pdd => "pdd",
            Method::Map => "map",
            Method::PddQuantizeThenRound => "pdd_quantize_then_round",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Array and stream dimensions; power comes from the SNR list and phase
/// resolution from the bits list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemTemplate {
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub num_tx_rf: usize,
    pub num_rx_rf: usize,
    pub num_users: usize,
    pub streams_per_user: usize,
    #[serde(default = "one")]
    pub noise_variance: f64,
}

fn one() -> f64 {
    1.0
}

impl SystemTemplate {
    pub fn instantiate(&self, snr_db: f64, bits: PhaseResolution) -> hbf_core::Result<SystemConfig> {
        let cfg = SystemConfig::new(
            self.num_tx_antennas,
            self.num_rx_antennas,
            self.num_tx_rf,
            self.num_rx_rf,
            self.num_users,
            self.streams_per_user,
        )?
        .with_noise(self.noise_variance)
        .with_snr_db(snr_db)
        .with_phase_bits(bits);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemTemplate,
    pub snr_db_list: Vec<f64>,
    #[serde(default = "default_bits")]
    pub bits_list: Vec<PhaseResolution>,
    pub methods: Vec<Method>,
    pub num_channels: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_paths")]
    pub num_paths: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Run the matrix-approximation method with finite phase sets as well.
    #[serde(default)]
    pub map_finite: bool,
    #[serde(default = "yes")]
    pub write_traces: bool,
    #[serde(default)]
    pub pdd: PddConfig,
    #[serde(default)]
    pub wmmse: WmmseConfig,
    #[serde(default)]
    pub map: MapConfig,
}

fn default_bits() -> Vec<PhaseResolution> {
    vec![PhaseResolution::Infinite]
}

fn default_paths() -> usize {
    DEFAULT_NUM_PATHS
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn yes() -> bool {
    true
}

impl ExperimentSpec {
    /// Spec with every optional field at its default.
    pub fn new(system: SystemTemplate, snr_db_list: Vec<f64>, methods: Vec<Method>, num_channels: usize) -> Self {
        Self {
            system,
            snr_db_list,
            bits_list: default_bits(),
            methods,
            num_channels,
            base_seed: 0,
            num_paths: default_paths(),
            output_dir: default_output(),
            map_finite: false,
            write_traces: true,
            pdd: PddConfig::default(),
            wmmse: WmmseConfig::default(),
            map: MapConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.num_channels == 0 {
            return Err(invalid("num_channels", "must be at least 1"));
        }
        if self.num_paths == 0 {
            return Err(invalid("num_paths", "must be at least 1"));
        }
        if self.snr_db_list.is_empty() {
            return Err(invalid("snr_db_list", "must not be empty"));
        }
        if let Some(x) = self.snr_db_list.iter().find(|x| !x.is_finite()) {
            return Err(invalid("snr_db_list", format!("{x} is not finite")));
        }
        if self.bits_list.is_empty() {
            return Err(invalid("bits_list", "must not be empty"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "must not be empty"));
        }
        if !(self.system.noise_variance > 0.0 && self.system.noise_variance.is_finite()) {
            return Err(invalid("system.noise_variance", "must be positive"));
        }
        self.system
            .instantiate(0.0, PhaseResolution::Infinite)
            .map_err(|e| invalid("system", e.to_string()))?;
        for &b in &self.bits_list {
            self.system.instantiate(0.0, b).map_err(|e| invalid("bits_list", e.to_string()))?;
        }
        self.pdd.validate().map_err(|e| invalid("pdd", e.to_string()))?;
        if self.wmmse.restarts == 0 || self.wmmse.max_iters == 0 {
            return Err(invalid("wmmse", "restarts and max_iters must be positive"));
        }
        if self.map.max_alternations == 0 {
            return Err(invalid("map.max_alternations", "must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, SpecError> {
    let spec: ExperimentSpec = toml::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Read { path: path.to_path_buf(), source })?;
    parse_spec_str(&text)
}
