use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::backend::{Backend, CachedBackend, DecodingParams, GenerationCache, HttpBackend, HttpConfig, MockBackend};
use crate::corruption::DEFAULT_MERGES;
use crate::description::DescriptionMode;
use crate::prompting::{Ablation, DEFAULT_ROLE_LINE, DEFAULT_TASK_DESCRIPTION, DEFAULT_SHOTS};
use crate::retrieval::Bm25Params;

/// Where train and test records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Generate `records` synthetic reports and split them with the run seed.
    Synthetic {
        records: usize,
        train: usize,
        #[serde(default)]
        validation: usize,
        test: usize,
    },
    /// Pre-split line-delimited corpora, optionally with a probability CSV
    /// joined by id.
    Files {
        train: PathBuf,
        test: PathBuf,
        #[serde(default)]
        probabilities: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Mock { rule: String },
    Http(HttpConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Mock { rule: "echo-first-shot-impression".into() }
    }
}

impl BackendConfig {
    /// Instantiates the backend, wrapped in a disk cache when `cache_dir`
    /// is given.
    pub fn build(&self, cache_dir: Option<&Path>) -> Result<Box<dyn Backend>, RunError> {
        let inner: Box<dyn Backend> = match self {
            BackendConfig::Mock { rule } => Box::new(MockBackend::new(rule.parse()?)),
            BackendConfig::Http(cfg) => Box::new(HttpBackend::new(cfg.clone())?),
        };
        Ok(match cache_dir {
            Some(dir) => Box::new(CachedBackend::new(inner, GenerationCache::open(dir)?)),
            None => inner,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub role_line: String,
    pub task_description: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self { role_line: DEFAULT_ROLE_LINE.into(), task_description: DEFAULT_TASK_DESCRIPTION.into() }
    }
}

/// One experiment sweep: every corruption rate crossed with every
/// (ablation, shot count) condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataSource,
    pub rates: Vec<f64>,
    pub shots: Vec<usize>,
    pub ablations: Vec<Ablation>,
    pub description: DescriptionMode,
    pub bm25: Bm25Params,
    pub bpe_merges: usize,
    pub prompt: PromptTemplate,
    pub backend: BackendConfig,
    pub decoding: DecodingParams,
    pub max_in_flight: usize,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataSource::Synthetic { records: 600, train: 500, validation: 0, test: 50 },
            rates: vec![0.0, 0.1, 0.3, 0.5],
            shots: vec![DEFAULT_SHOTS],
            ablations: vec![Ablation::Full],
            description: DescriptionMode::default(),
            bm25: Bm25Params::default(),
            bpe_merges: DEFAULT_MERGES,
            prompt: PromptTemplate::default(),
            backend: BackendConfig::default(),
            decoding: DecodingParams::default(),
            max_in_flight: 4,
            output_dir: PathBuf::from("runs/latest"),
            cache_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let config: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.rates.is_empty() {
            return bad("at least one corruption rate is required".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("corruption rate {r} is outside [0, 1]"));
        }
        if self.shots.is_empty() || self.ablations.is_empty() {
            return bad("shots and ablations must each list at least one value".into());
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        self.bm25.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.description.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.decoding.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if let DataSource::Synthetic { records, train, validation, test } = self.data {
            if train == 0 || test == 0 || train + validation + test > records {
                return bad(format!(
                    "synthetic split ({train}, {validation}, {test}) does not fit in {records} records"
                ));
            }
        }
        Ok(())
    }
}
