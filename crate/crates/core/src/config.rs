//! TOML run configuration. Every section is optional and falls back to the
//! defaults of the matching config type; CLI flags are applied on top.
//!
//! ```toml
//! seed = 42
//!
//! [walk]
//! walk_length = 45
//! walks_per_node = 40
//!
//! [train]
//! embedding_dim = 256
//! epochs = 36
//!
//! [retrieval]
//! m = 3
//! k_pool = 10
//!
//! [backend]
//! provider = "glm"
//! model = "glm-4"
//! api_key_env = "ZHIPU_API_KEY"
//!
//! [bench]
//! workers = 4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{TrainConfig, WalkConfig};
use crate::llm::BackendConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    /// Examples per dynamic or random few-shot prompt.
    pub m: usize,
    /// Neighbours voting in the knn baseline.
    pub k_pool: usize,
    pub exclude_same_gold: bool,
    /// `false` lets a query retrieve its own case (leakage mode).
    pub self_exclusion: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            m: 3,
            k_pool: 10,
            exclude_same_gold: false,
            self_exclusion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub workers: usize,
    /// Manual match overrides, `case_id<TAB>rank<TAB>accept|reject`.
    pub overrides: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            overrides: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces the walk and training seeds.
    pub seed: Option<u64>,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub retrieval: RetrievalConfig,
    pub backend: BackendConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            retrieval: RetrievalConfig::default(),
            backend: BackendConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.apply_seed();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.apply_seed();
    }

    fn apply_seed(&mut self) {
        if let Some(s) = self.seed {
            self.walk.seed = s;
            self.train.seed = s;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Provider;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.train.embedding_dim, 256);
        assert_eq!(cfg.walk.walk_length, 45);
        assert_eq!(cfg.retrieval.m, 3);
    }

    #[test]
    fn sections_and_seed() {
        let cfg = RunConfig::from_toml(
            "seed = 7\n[train]\nembedding_dim = 32\n[backend]\nprovider = \"glm\"\nmodel = \"glm-4\"\ntemperature = 0.15\n",
        )
        .unwrap();
        assert_eq!(cfg.train.embedding_dim, 32);
        assert_eq!(cfg.train.epochs, 36);
        assert_eq!((cfg.walk.seed, cfg.train.seed), (7, 7));
        assert_eq!(cfg.backend.provider, Provider::Glm);
        assert_eq!(cfg.backend.temperature, Some(0.15));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[retrieval]\nmm = 3\n").is_err());
        assert!(RunConfig::from_toml("[backend]\napi_key = \"sk-x\"\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.bench.workers = 3;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
