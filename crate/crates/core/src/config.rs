//! Run configuration: a TOML file and/or flag overrides, resolved into one
//! [`RunConfig`] that is serialized next to the outputs for reproducibility.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engines::predictor::PredictorPolicy;
use crate::metrics::{Granularity, SyntacticMetric};
use crate::mutant::Engine;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Invalid(String),
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Corpus directory; `None` selects the bundled micro-corpus.
    pub corpus_path: Option<PathBuf>,
    pub engines: BTreeSet<Engine>,
    pub predictor_policy: PredictorPolicy,
    /// Top-k predictions per masked token.
    pub k: usize,
    /// Pattern-engine mutant cap per subject.
    pub cap: usize,
    pub step_limit: u64,
    pub workers: usize,
    pub syntactic_metric: SyntacticMetric,
    pub granularity: Granularity,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Maximum masked-query window, in tokens.
    pub context_limit: usize,
    pub ngram_order: usize,
    pub repetitions: usize,
    pub checkpoints: Vec<u8>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_path: None,
            engines: Engine::all().into_iter().collect(),
            predictor_policy: PredictorPolicy::All,
            k: 5,
            cap: 100,
            step_limit: crate::minilang::DEFAULT_STEP_LIMIT,
            workers: 1,
            syntactic_metric: SyntacticMetric::Bleu,
            granularity: Granularity::File,
            seed: 42,
            out_dir: PathBuf::from("out"),
            context_limit: 512,
            ngram_order: 3,
            repetitions: 100,
            checkpoints: vec![10, 20, 50, 75, 100],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("k", self.k),
            ("cap", self.cap),
            ("workers", self.workers),
            ("context_limit", self.context_limit),
            ("ngram_order", self.ngram_order),
            ("repetitions", self.repetitions),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be >= 1")));
            }
        }
        if self.step_limit == 0 {
            return Err(ConfigError::Invalid("step_limit must be >= 1".into()));
        }
        if self.engines.is_empty() {
            return Err(ConfigError::Invalid("at least one engine".into()));
        }
        if self.checkpoints.is_empty() || *self.checkpoints.last().unwrap() != 100 {
            return Err(ConfigError::Invalid("checkpoints must end at 100".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid("checkpoints must ascend".into()));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let config = RunConfig {
            k: 3,
            cap: 50,
            workers: 4,
            ..Default::default()
        };
        let text = config.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn zero_counts_rejected() {
        let bad = RunConfig {
            k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<RunConfig>("nonsense_key = 1");
        assert!(err.is_err());
    }
}
