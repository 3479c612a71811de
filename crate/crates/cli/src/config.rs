//! Run configuration: a TOML file with per-command sections, overridden by
//! command-line flags. All numeric fields are range-checked by the owning
//! module before dispatch.

use std::path::{Path, PathBuf};

use epiwave_core::RngSeed;
use serde::{Deserialize, Serialize};

use crate::error::AppError;

/// Effective global configuration after merging file, environment, flags.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunConfig {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,

    #[serde(default)]
    pub changepoint: toml::Table,
    #[serde(default)]
    pub countts: toml::Table,
    #[serde(default)]
    pub simulate: toml::Table,
    #[serde(default)]
    pub fit_seirqpd: toml::Table,
    #[serde(default)]
    pub rt: toml::Table,
}

impl RunConfig {
    pub fn load(
        path: Option<&Path>,
        out_flag: Option<PathBuf>,
        seed_flag: Option<u64>,
    ) -> Result<Self, AppError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    AppError::validation(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str::<RunConfig>(&text)
                    .map_err(|e| AppError::validation(format!("config: {e}")))?
            }
            None => RunConfig::default(),
        };
        if let Some(out) = out_flag {
            config.out_dir = Some(out);
        }
        if config.out_dir.is_none() {
            config.out_dir = std::env::var_os("EPIWAVE_OUT").map(PathBuf::from);
        }
        if let Some(seed) = seed_flag {
            config.seed = Some(seed);
        }
        Ok(config)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("epiwave-out"))
    }

    pub fn seed(&self) -> RngSeed {
        RngSeed::new(self.seed.unwrap_or(0))
    }

    /// Section value lookup with a flag override taking precedence.
    pub fn value_or<T: Clone>(
        flag: Option<T>,
        section: &toml::Table,
        key: &str,
        from_toml: impl Fn(&toml::Value) -> Option<T>,
        default: T,
    ) -> T {
        if let Some(v) = flag {
            return v;
        }
        section.get(key).and_then(|v| from_toml(v)).unwrap_or(default)
    }
}
