//! Experiment orchestration: data preparation, corruption sweeps, few-shot
//! generation and report emission.

mod artifacts;
mod config;
mod experiment;
mod report;
mod validate;

use std::path::PathBuf;

pub use artifacts::{load_corrupted_sets, write_corrupted_sets, CorruptionManifest, ManifestEntry, CORRUPTION_MANIFEST};
pub use config::{BackendConfig, DataSource, ExperimentConfig, PromptTemplate};
pub use experiment::{
    prompt_hash, run_experiment, Condition, ConditionSummary, ExperimentReport, MeanRouge, RecordRow, RunStats,
};
pub use report::{emit_report, load_report, load_rows, render_tables, summary_csv, REPORT_FILES};
pub use validate::{validate_corruption, CorruptionTrend, TrendPoint, TrendVerdict, MIN_TREND_RECORDS};

use crate::backend::BackendError;
use crate::corpus::CorpusError;
use crate::corruption::CorruptionError;
use crate::prompting::PromptError;
use crate::retrieval::RetrievalError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("record {id}, {stage}: {source}")]
    Stage {
        id: String,
        stage: &'static str,
        #[source]
        source: Box<RunError>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("misaligned sets: {0}")]
    Misaligned(String),
    #[error("malformed report file {}: {message}", path.display())]
    Report { path: PathBuf, message: String },
}

impl RunError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
        let path = path.into();
        move |source| RunError::Io { path, source }
    }

    /// Process exit status: 1 usage/config, 2 data, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Backend(BackendError::InvalidConfig(_) | BackendError::MissingApiKey(_)) => 1,
            RunError::Backend(_) => 3,
            RunError::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
