use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackKind, AttackStrategy};
use crate::protocol::RoundConfig;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}`, expected csv or json")),
        }
    }
}

fn default_one() -> u32 {
    1
}

fn default_key_sets() -> u32 {
    2
}

fn default_strategy() -> AttackKind {
    AttackKind::Passive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: u32,
    pub k_prime: u32,
    #[serde(default = "default_one")]
    pub trials: u32,
    #[serde(default = "default_one")]
    pub rounds_per_trial: u32,
    #[serde(default = "default_strategy")]
    pub strategy: AttackKind,
    #[serde(default)]
    pub attack_budget: u32,
    #[serde(default)]
    pub master_seed: u64,
    /// Key sets each party starts with; an abort costs one.
    #[serde(default = "default_key_sets")]
    pub initial_key_sets: u32,
    #[serde(default)]
    pub test_mode: bool,
    /// Where the report goes; not part of the report itself.
    #[serde(default, skip_serializing)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(k: u32, k_prime: u32, strategy: AttackStrategy, trials: u32, master_seed: u64) -> Self {
        ExperimentConfig {
            k,
            k_prime,
            trials,
            rounds_per_trial: 1,
            strategy: strategy.kind,
            attack_budget: strategy.budget,
            master_seed,
            initial_key_sets: default_key_sets(),
            test_mode: false,
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn round_config(&self, seed: u64) -> RoundConfig {
        RoundConfig {
            k: self.k,
            k_prime: self.k_prime,
            seed,
            test_mode: self.test_mode,
        }
    }

    pub fn attack(&self) -> AttackStrategy {
        AttackStrategy::new(self.strategy, self.attack_budget)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.round_config(0)
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.rounds_per_trial == 0 {
            return Err(HarnessError::Config("rounds_per_trial must be at least 1".into()));
        }
        if self.initial_key_sets == 0 {
            return Err(HarnessError::Config("initial_key_sets must be at least 1".into()));
        }
        self.attack().validate(self.k).map_err(HarnessError::Config)
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index`, independent of how trials are scheduled.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
