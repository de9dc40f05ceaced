//! Experiment configuration file.
//!
//! A single TOML document; every section and field is optional and falls
//! back to the defaults shown here:
//!
//! ```toml
//! seeds = [1, 2, 3]
//! output_dir = "out"
//!
//! [topology]
//! # path = "my_topology.txt"   # omitted: built-in NSFNET
//! max_span_km = 80.0
//!
//! [bands]
//! plan = [["L", 80], ["C", 80], ["S", 108]]
//! channel_width_ghz = 75.0
//! gap_ghz = 400.0
//! c_band_start_thz = 191.7
//!
//! [physical]
//! launch_power_dbm = 0.0
//! symbol_rate_gbaud = 64.0
//! trx_snr_db = 20.0
//! filtering_penalty_db = 1.0
//! aging_margin_db = 1.0
//! frequency_model = "band_center"     # or "per_channel"
//! target_ber = 1.5e-2
//! c_band = { noise_figure_db = 4.5, attenuation_db_per_km = 0.20, nli_eta = 450.0 }
//! # l_band / s_band likewise
//!
//! [env]
//! k = 5
//! episode_length = 1000
//! max_channels_per_request = 8
//!
//! [traffic]
//! loads = [800.0]
//! mean_holding_s = 1.0
//! bitrates_gbps = [100, 200, 300, 400, 500, 600]
//!
//! [policy]
//! name = "fbff"                 # fbff | daff | baff | random | drl
//! band_order = ["C", "L", "S"]
//! # checkpoint = "out/checkpoint.bin"
//!
//! [train]
//! episodes = 2000
//! gamma = 0.95
//! learning_rate = 5e-5
//! buffer_size = 1000
//! minibatch_size = 500
//! # see TrainConfig for the rest
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::TrainConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::qot::{PhysicalParams, DEFAULT_TARGET_BER};
use crate::spectrum::{Band, BandPlan, DEFAULT_BAND_GAP_GHZ, DEFAULT_CHANNEL_WIDTH_GHZ, DEFAULT_C_BAND_START_THZ};
use crate::topology::{self, NetworkTopology, DEFAULT_MAX_SPAN_KM};
use crate::traffic::{TrafficParams, DEFAULT_BITRATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub path: Option<PathBuf>,
    pub max_span_km: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            path: None,
            max_span_km: DEFAULT_MAX_SPAN_KM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsConfig {
    pub plan: Vec<(Band, usize)>,
    pub channel_width_ghz: f64,
    pub gap_ghz: f64,
    pub c_band_start_thz: f64,
}

impl Default for BandsConfig {
    fn default() -> Self {
        BandsConfig {
            plan: vec![(Band::L, 80), (Band::C, 80), (Band::S, 108)],
            channel_width_ghz: DEFAULT_CHANNEL_WIDTH_GHZ,
            gap_ghz: DEFAULT_BAND_GAP_GHZ,
            c_band_start_thz: DEFAULT_C_BAND_START_THZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConfig {
    #[serde(flatten)]
    pub params: PhysicalParams,
    pub target_ber: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        PhysicalConfig {
            params: PhysicalParams::default(),
            target_ber: DEFAULT_TARGET_BER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub k: usize,
    pub episode_length: usize,
    pub max_channels_per_request: usize,
}

impl Default for EnvSection {
    fn default() -> Self {
        let d = EnvConfig::default();
        EnvSection {
            k: d.k,
            episode_length: d.episode_length,
            max_channels_per_request: d.max_channels_per_request,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub loads: Vec<f64>,
    pub mean_holding_s: f64,
    pub bitrates_gbps: Vec<u32>,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            loads: vec![800.0],
            mean_holding_s: 1.0,
            bitrates_gbps: DEFAULT_BITRATES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub name: String,
    pub band_order: Option<Vec<Band>>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            name: "fbff".into(),
            band_order: None,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub episodes: usize,
    #[serde(flatten)]
    pub config: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            episodes: 2000,
            config: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub topology: TopologyConfig,
    pub bands: BandsConfig,
    pub physical: PhysicalConfig,
    pub env: EnvSection,
    pub traffic: TrafficSection,
    pub policy: PolicySection,
    pub train: TrainSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![1],
            output_dir: PathBuf::from("out"),
            topology: TopologyConfig::default(),
            bands: BandsConfig::default(),
            physical: PhysicalConfig::default(),
            env: EnvSection::default(),
            traffic: TrafficSection::default(),
            policy: PolicySection::default(),
            train: TrainSection::default(),
        }
    }
}

pub const POLICY_NAMES: [&str; 5] = ["fbff", "daff", "baff", "random", "drl"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file, resolving relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.topology.path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.policy.checkpoint.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.traffic.loads.is_empty() {
            return Err(Error::Config("load list is empty".into()));
        }
        if let Some(p) = &self.topology.path {
            if !p.exists() {
                return Err(Error::Config(format!("topology file {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.policy.checkpoint {
            if !p.exists() {
                return Err(Error::Config(format!("checkpoint {} does not exist", p.display())));
            }
        }
        if !POLICY_NAMES.contains(&self.policy.name.as_str()) {
            return Err(Error::Config(format!("unknown policy `{}`", self.policy.name)));
        }
        if !(self.physical.target_ber > 0.0 && self.physical.target_ber < 0.5) {
            return Err(Error::Config("target BER must lie in (0, 0.5)".into()));
        }
        for &load in &self.traffic.loads {
            self.traffic_params(load).validate()?;
        }
        self.physical.params.validate()?;
        self.env_config(self.traffic.loads[0]).validate()?;
        self.train.config.validate()?;
        self.band_plan()?;
        Ok(())
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        match &self.topology.path {
            Some(p) => topology::load_topology(p, self.topology.max_span_km),
            None if self.topology.max_span_km == DEFAULT_MAX_SPAN_KM => Ok(topology::builtin_nsfnet()),
            None => {
                let t = topology::builtin_nsfnet();
                let links: Vec<_> = t.links().iter().map(|l| (l.a, l.b, l.length_km)).collect();
                NetworkTopology::new(t.num_nodes(), &links, self.topology.max_span_km)
            }
        }
    }

    pub fn band_plan(&self) -> Result<BandPlan> {
        BandPlan::new(
            self.bands.plan.clone(),
            self.bands.channel_width_ghz,
            self.bands.gap_ghz,
            self.bands.c_band_start_thz,
        )
    }

    pub fn traffic_params(&self, load: f64) -> TrafficParams {
        TrafficParams {
            load_erlang: load,
            mean_holding_s: self.traffic.mean_holding_s,
            bitrates_gbps: self.traffic.bitrates_gbps.clone(),
        }
    }

    pub fn env_config(&self, load: f64) -> EnvConfig {
        EnvConfig {
            k: self.env.k,
            episode_length: self.env.episode_length,
            max_channels_per_request: self.env.max_channels_per_request,
            traffic: self.traffic_params(load),
        }
    }

    pub fn band_order(&self, plan: &BandPlan) -> Result<Vec<usize>> {
        match &self.policy.band_order {
            None => Ok(crate::heuristics::default_band_order(plan)),
            Some(bands) => bands
                .iter()
                .map(|b| plan.band_index(*b).ok_or_else(|| Error::Config(format!("band {b} is not in the plan"))))
                .collect(),
        }
    }
}
