//! Simulation parameters: loading, validation, overrides, and sweeps.
//!
//! Config keys are named by role (`uav_density_per_m2`, `ue_density_per_m2`),
//! never by Greek letter, because the usual symbol conventions for the
//! UAV and UE densities contradict each other. A config file is flat TOML
//! with keys exactly matching the `SimConfig` field names; unknown keys are
//! rejected rather than ignored.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Which network architecture is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// UAVs act as base stations serving ground UEs; no ground BSs.
    FlyingBs,
    /// UAVs act as user equipments, peers of ground UEs; ground BSs serve.
    AerialUe,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::FlyingBs => "flying-bs",
            Scenario::AerialUe => "aerial-ue",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spectrum sharing strategy under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Underlay D2D UEs reuse cellular subchannels only; no jammers.
    Traditional,
    /// Underlay D2D UEs reuse cellular or overlay subchannels, and idle
    /// D2D UEs may act as friendly jammers on the tagged subchannels.
    New,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Traditional => "traditional",
            Strategy::New => "new",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the decoding threshold `beta_dbm` is applied during idle detection.
///
/// The threshold is printed with a power unit but applied to an SINR in the
/// source algorithm, so both readings are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaInterpretation {
    /// Compare the desired-signal received power (mW, fading included)
    /// against `10^(beta_dbm/10)` mW.
    RssDbm,
    /// Compare the link SINR in dB against `beta_dbm - noise_dbm` dB.
    SinrDb,
}

impl BetaInterpretation {
    pub fn as_str(&self) -> &'static str {
        match self {
            BetaInterpretation::RssDbm => "rss-dbm",
            BetaInterpretation::SinrDb => "sinr-db",
        }
    }
}

impl fmt::Display for BetaInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_jammer_tx() -> Option<f64> {
    None
}
fn default_beta_interpretation() -> BetaInterpretation {
    BetaInterpretation::RssDbm
}
fn default_rician_k_db() -> f64 {
    10.0
}
fn default_underlay_prob() -> f64 {
    0.5
}
fn default_min_link_distance() -> f64 {
    1.0
}
fn default_strategy() -> Strategy {
    Strategy::New
}
fn default_n_drops() -> u32 {
    1000
}
fn default_master_seed() -> u64 {
    0
}

/// All simulation parameters for one run.
///
/// Required keys are the physical scenario parameters; everything the
/// reference parameter set omits has a documented default here and can be
/// overridden from the file or the command line. Immutable after
/// validation; safe to share across concurrent drop workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Region area S (m²). The region is an axis-aligned square of side √S.
    pub area_m2: f64,
    /// Total system bandwidth W (Hz).
    pub bandwidth_hz: f64,
    /// Ground base station density (per m²).
    pub bs_density_per_m2: f64,
    /// UAV density (per m²).
    pub uav_density_per_m2: f64,
    /// Ground UE density (per m²).
    pub ue_density_per_m2: f64,
    /// Eavesdropper density (per m²).
    pub eaves_density_per_m2: f64,
    /// UAV flying altitude H (m).
    pub uav_altitude_m: f64,
    /// UAV transmit power (mW).
    pub uav_tx_mw: f64,
    /// Ground UE transmit power (mW).
    pub ue_tx_mw: f64,
    /// Jammer transmit power (mW). Defaults to `ue_tx_mw` when absent:
    /// jammers are idle D2D UEs.
    #[serde(default = "default_jammer_tx", skip_serializing_if = "Option::is_none")]
    pub jammer_tx_mw: Option<f64>,
    /// Decoding threshold β (dBm as printed).
    pub beta_dbm: f64,
    /// How β is applied; see [`BetaInterpretation`].
    #[serde(default = "default_beta_interpretation")]
    pub beta_interpretation: BetaInterpretation,
    /// Spectrum partition factor η in [0, 1]: fraction of W assigned to
    /// cellular UEs, the rest to overlay D2D UEs.
    pub eta: f64,
    /// Noise variance σ² (dBm).
    pub noise_dbm: f64,
    /// Path loss exponent for any link with an airborne endpoint.
    pub alpha_air: f64,
    /// Path loss exponent for ground-to-ground links.
    pub alpha_ground: f64,
    /// Rician K-factor for airborne links (dB).
    #[serde(default = "default_rician_k_db")]
    pub rician_k_db: f64,
    /// Probability that a D2D UE is underlay rather than overlay.
    #[serde(default = "default_underlay_prob")]
    pub underlay_prob: f64,
    /// Path-loss distance clamp (m).
    #[serde(default = "default_min_link_distance")]
    pub min_link_distance_m: f64,
    /// Network architecture.
    pub scenario: Scenario,
    /// Spectrum sharing strategy.
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Monte Carlo drop count.
    #[serde(default = "default_n_drops")]
    pub n_drops: u32,
    /// Master seed; together with the config it determines every output byte.
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
}

impl SimConfig {
    /// Effective jammer transmit power (mW).
    pub fn jammer_tx_mw(&self) -> f64 {
        self.jammer_tx_mw.unwrap_or(self.ue_tx_mw)
    }

    /// Side length of the square region (m).
    pub fn region_side_m(&self) -> f64 {
        self.area_m2.sqrt()
    }

    /// Noise power σ² in mW.
    pub fn noise_mw(&self) -> f64 {
        crate::channel::dbm_to_mw(self.noise_dbm)
    }

    /// Checks every invariant and returns all violations, not just the first.
    // Negated comparisons are deliberate: NaN must register as a violation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.eta) {
            v.push(format!("eta out of [0,1]: {}", self.eta));
        }
        if !(0.0..=1.0).contains(&self.underlay_prob) {
            v.push(format!(
                "underlay_prob out of [0,1]: {}",
                self.underlay_prob
            ));
        }
        for (name, d) in [
            ("bs_density_per_m2", self.bs_density_per_m2),
            ("uav_density_per_m2", self.uav_density_per_m2),
            ("ue_density_per_m2", self.ue_density_per_m2),
            ("eaves_density_per_m2", self.eaves_density_per_m2),
        ] {
            if !(d >= 0.0) {
                v.push(format!("{name} must be >= 0, got {d}"));
            }
        }
        for (name, p) in [
            ("uav_tx_mw", self.uav_tx_mw),
            ("ue_tx_mw", self.ue_tx_mw),
            ("jammer_tx_mw", self.jammer_tx_mw()),
        ] {
            if !(p > 0.0) {
                v.push(format!("{name} must be > 0, got {p}"));
            }
        }
        if !(self.area_m2 > 0.0) {
            v.push(format!("area_m2 must be > 0, got {}", self.area_m2));
        }
        if !(self.bandwidth_hz > 0.0) {
            v.push(format!(
                "bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            ));
        }
        if !(self.alpha_air >= 2.0) {
            v.push(format!(
                "alpha_air below free-space floor 2: {}",
                self.alpha_air
            ));
        }
        if !(self.alpha_ground >= 2.0) {
            v.push(format!(
                "alpha_ground below free-space floor 2: {}",
                self.alpha_ground
            ));
        }
        if !(self.uav_altitude_m >= 0.0) {
            v.push(format!(
                "uav_altitude_m must be >= 0, got {}",
                self.uav_altitude_m
            ));
        }
        if !(self.min_link_distance_m > 0.0) {
            v.push(format!(
                "min_link_distance_m must be > 0, got {}",
                self.min_link_distance_m
            ));
        }
        match self.scenario {
            Scenario::FlyingBs => {
                if !(self.uav_density_per_m2 > 0.0) {
                    v.push(
                        "no flying BSs: scenario flying-bs requires uav_density_per_m2 > 0".into(),
                    );
                }
                if self.bs_density_per_m2 > 0.0 {
                    v.push(
                        "ground BSs are not modeled under flying-bs: bs_density_per_m2 must be 0"
                            .into(),
                    );
                }
            }
            Scenario::AerialUe => {
                if !(self.bs_density_per_m2 > 0.0) {
                    v.push("no BSs: scenario aerial-ue requires bs_density_per_m2 > 0".into());
                }
            }
        }
        if self.n_drops == 0 {
            v.push("n_drops must be >= 1".into());
        }
        v
    }

    /// Serializes the config to the on-disk TOML form. `load_config` of the
    /// result is the identity.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig is always serializable")
    }

    /// Reads a numeric field by config key. Returns `None` for unknown or
    /// non-numeric keys.
    pub fn get_numeric(&self, key: &str) -> Option<f64> {
        Some(match key {
            "area_m2" => self.area_m2,
            "bandwidth_hz" => self.bandwidth_hz,
            "bs_density_per_m2" => self.bs_density_per_m2,
            "uav_density_per_m2" => self.uav_density_per_m2,
            "ue_density_per_m2" => self.ue_density_per_m2,
            "eaves_density_per_m2" => self.eaves_density_per_m2,
            "uav_altitude_m" => self.uav_altitude_m,
            "uav_tx_mw" => self.uav_tx_mw,
            "ue_tx_mw" => self.ue_tx_mw,
            "jammer_tx_mw" => self.jammer_tx_mw(),
            "beta_dbm" => self.beta_dbm,
            "eta" => self.eta,
            "noise_dbm" => self.noise_dbm,
            "alpha_air" => self.alpha_air,
            "alpha_ground" => self.alpha_ground,
            "rician_k_db" => self.rician_k_db,
            "underlay_prob" => self.underlay_prob,
            "min_link_distance_m" => self.min_link_distance_m,
            _ => return None,
        })
    }

    /// Writes a numeric field by config key.
    pub fn set_numeric(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        match key {
            "area_m2" => self.area_m2 = value,
            "bandwidth_hz" => self.bandwidth_hz = value,
            "bs_density_per_m2" => self.bs_density_per_m2 = value,
            "uav_density_per_m2" => self.uav_density_per_m2 = value,
            "ue_density_per_m2" => self.ue_density_per_m2 = value,
            "eaves_density_per_m2" => self.eaves_density_per_m2 = value,
            "uav_altitude_m" => self.uav_altitude_m = value,
            "uav_tx_mw" => self.uav_tx_mw = value,
            "ue_tx_mw" => self.ue_tx_mw = value,
            "jammer_tx_mw" => self.jammer_tx_mw = Some(value),
            "beta_dbm" => self.beta_dbm = value,
            "eta" => self.eta = value,
            "noise_dbm" => self.noise_dbm = value,
            "alpha_air" => self.alpha_air = value,
            "alpha_ground" => self.alpha_ground = value,
            "rician_k_db" => self.rician_k_db = value,
            "underlay_prob" => self.underlay_prob = value,
            "min_link_distance_m" => self.min_link_distance_m = value,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies one `key=value` override, accepting any config key including
    /// the enum and integer ones.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError::BadValue(key.to_string(), v.to_string()))
        };
        match key {
            "scenario" => {
                self.scenario = match value {
                    "flying-bs" => Scenario::FlyingBs,
                    "aerial-ue" => Scenario::AerialUe,
                    _ => return Err(ConfigError::BadValue(key.into(), value.into())),
                }
            }
            "strategy" => {
                self.strategy = match value {
                    "traditional" => Strategy::Traditional,
                    "new" => Strategy::New,
                    _ => return Err(ConfigError::BadValue(key.into(), value.into())),
                }
            }
            "beta_interpretation" => {
                self.beta_interpretation = match value {
                    "rss-dbm" => BetaInterpretation::RssDbm,
                    "sinr-db" => BetaInterpretation::SinrDb,
                    _ => return Err(ConfigError::BadValue(key.into(), value.into())),
                }
            }
            "n_drops" => {
                self.n_drops = value
                    .parse()
                    .map_err(|_| ConfigError::BadValue(key.into(), value.into()))?
            }
            "master_seed" => {
                self.master_seed = value
                    .parse()
                    .map_err(|_| ConfigError::BadValue(key.into(), value.into()))?
            }
            numeric => {
                let v = parse_f64(value)?;
                self.set_numeric(numeric, v)?;
            }
        }
        Ok(())
    }
}

/// An ordered list of values for one numeric config key.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter_name: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Builds a sweep after checking the key is numeric and the values are
    /// non-empty and strictly monotone (either direction).
    pub fn new(parameter_name: &str, values: Vec<f64>) -> Result<Self, ConfigError> {
        // Probe against an arbitrary config shape: the key set is static.
        if !NUMERIC_KEYS.contains(&parameter_name) {
            return Err(ConfigError::NotSweepable(parameter_name.to_string()));
        }
        if values.is_empty() {
            return Err(ConfigError::EmptySweep);
        }
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = values.windows(2).all(|w| w[0] > w[1]);
        if values.len() > 1 && !increasing && !decreasing {
            return Err(ConfigError::NonMonotoneSweep(parameter_name.to_string()));
        }
        Ok(SweepSpec {
            parameter_name: parameter_name.to_string(),
            values,
        })
    }
}

/// The numeric, sweepable config keys.
pub const NUMERIC_KEYS: &[&str] = &[
    "area_m2",
    "bandwidth_hz",
    "bs_density_per_m2",
    "uav_density_per_m2",
    "ue_density_per_m2",
    "eaves_density_per_m2",
    "uav_altitude_m",
    "uav_tx_mw",
    "ue_tx_mw",
    "jammer_tx_mw",
    "beta_dbm",
    "eta",
    "noise_dbm",
    "alpha_air",
    "alpha_ground",
    "rician_k_db",
    "underlay_prob",
    "min_link_distance_m",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("unknown config key: {0}")]
    UnknownKey(String),
    #[error("bad value for {0}: {1}")]
    BadValue(String, String),
    #[error("not a sweepable numeric key: {0}")]
    NotSweepable(String),
    #[error("sweep values must be non-empty")]
    EmptySweep,
    #[error("sweep values for {0} must be strictly monotone")]
    NonMonotoneSweep(String),
}

/// Parses a config from TOML text and validates it.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let cfg: SimConfig = toml::from_str(text)?;
    let violations = cfg.validate();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Loads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Expands a sweep into one config per value, identical otherwise, order
/// preserved.
pub fn expand_sweep(cfg: &SimConfig, sweep: &SweepSpec) -> Result<Vec<SimConfig>, ConfigError> {
    sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.set_numeric(&sweep.parameter_name, v)?;
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn table1_flying_bs() -> SimConfig {
    SimConfig {
        area_m2: 1e6,
        bandwidth_hz: 2e9,
        bs_density_per_m2: 0.0,
        uav_density_per_m2: 1e-4,
        ue_density_per_m2: 0.2,
        eaves_density_per_m2: 0.001,
        uav_altitude_m: 300.0,
        uav_tx_mw: 200.0,
        ue_tx_mw: 230.0,
        jammer_tx_mw: None,
        beta_dbm: -120.0,
        beta_interpretation: BetaInterpretation::RssDbm,
        eta: 0.6,
        noise_dbm: -130.0,
        alpha_air: 2.0,
        alpha_ground: 4.0,
        rician_k_db: 10.0,
        underlay_prob: 0.5,
        min_link_distance_m: 1.0,
        scenario: Scenario::FlyingBs,
        strategy: Strategy::New,
        n_drops: 1000,
        master_seed: 0,
    }
}

#[cfg(test)]
pub(crate) fn table1_aerial_ue() -> SimConfig {
    SimConfig {
        area_m2: 1e6,
        bandwidth_hz: 2e9,
        bs_density_per_m2: 4e-5,
        uav_density_per_m2: 1e-3,
        ue_density_per_m2: 0.01,
        eaves_density_per_m2: 0.098,
        uav_altitude_m: 200.0,
        uav_tx_mw: 200.0,
        ue_tx_mw: 300.0,
        jammer_tx_mw: None,
        beta_dbm: -120.0,
        beta_interpretation: BetaInterpretation::RssDbm,
        eta: 0.5,
        noise_dbm: -130.0,
        alpha_air: 2.0,
        alpha_ground: 4.0,
        rician_k_db: 10.0,
        underlay_prob: 0.5,
        min_link_distance_m: 1.0,
        scenario: Scenario::AerialUe,
        strategy: Strategy::New,
        n_drops: 1000,
        master_seed: 0,
    }
}
