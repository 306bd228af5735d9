use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::envs::EnvSpec;
use crate::agent::AgentConfig;

#[derive(Debug, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Seeds as an explicit list or `base + i` for `i < count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl SeedSpec {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { base, count } => (0..*count).map(|i| base.wrapping_add(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    AlwaysSwitch,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    /// `episodes` and `seed` are filled in per sweep cell.
    pub agent: AgentConfig,
    pub k_grid: Vec<usize>,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub baselines: Vec<Baseline>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::new("(root)", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.expand().is_empty() {
            return Err(ConfigError::new("seeds", "must be nonempty"));
        }
        if self.k_grid.is_empty() {
            return Err(ConfigError::new("k_grid", "must be nonempty"));
        }
        if let Some(i) = self.k_grid.iter().position(|&k| k == 0) {
            return Err(ConfigError::new(
                format!("k_grid[{i}]"),
                "episode counts must be positive",
            ));
        }
        if let Some(i) = self.k_grid.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ConfigError::new(
                format!("k_grid[{}]", i + 1),
                "must be strictly increasing",
            ));
        }
        let mut probe = self.agent.clone();
        probe.episodes = self.k_grid[0];
        probe.validate().map_err(|e| ConfigError::new("agent", e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON with seeds expanded and the output
    /// path removed.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        canonical.seeds = SeedSpec::List(self.seeds.expand());
        let value = serde_json::to_value(&canonical).expect("config serialises");
        let text = serde_json::to_string(&value).expect("value serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "env": {"name": "chain", "n": 3, "horizon": 2, "gap": 0.3},
        "agent": {"estimator": "model_free", "beta": {"kind": "fixed", "value": 1.0}},
        "k_grid": [4, 8],
        "seeds": {"base": 10, "count": 2}
    }"#;

    #[test]
    fn parses_and_expands() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.seeds.expand(), vec![10, 11]);
    }

    #[test]
    fn hash_ignores_output_and_seed_spelling() {
        let a = ExperimentConfig::from_json(BASE).unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        b.seeds = SeedSpec::List(vec![10, 11]);
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.agent.delta = 0.05;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn validation_reports_paths() {
        let bad = BASE.replace("[4, 8]", "[8, 4]");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert_eq!(err.path, "k_grid[1]");
        let bad = BASE.replace(r#"{"base": 10, "count": 2}"#, "[]");
        assert_eq!(ExperimentConfig::from_json(&bad).unwrap_err().path, "seeds");
        let bad = BASE.replace(r#""value": 1.0"#, r#""value": -1.0"#);
        assert_eq!(ExperimentConfig::from_json(&bad).unwrap_err().path, "agent");
    }
}
