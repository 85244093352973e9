//! TOML run configuration shared by training, the GA and the command line.
//!
//! Every table and key is optional; missing ones take their defaults.
//! Unknown keys are rejected.
//!
//! ```toml
//! [train]
//! n_episodes = 700
//! master_seed = 0
//!
//! [train.reward]
//! a = [0.2, 0.5, 1.0, 0.25, 0.5, 0.1, 0.25]
//! gamma = 0.9
//!
//! [ga]
//! population = 50
//! seed = 0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::error::{ContractError, FormatError};
use crate::ga::GaConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub ga: GaConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, FormatError> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| FormatError::Schema {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        cfg.validate().map_err(|e| FormatError::Schema { path: ".".into(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        self.train.validate()?;
        self.ga.validate()
    }

    /// Sets the training master seed and the GA seed at once.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.master_seed = seed;
        self.ga.seed = seed;
        self
    }
}
