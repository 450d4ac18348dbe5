use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DataSource, ExperimentConfig};
use super::RunError;
use crate::backend::{generate_batch, GenerationRequest};
use crate::corpus::{self, ReportRecord};
use crate::corruption::{corrupt_test_set, train_bpe};
use crate::metrics::{f1_labels, label_text, rouge_l, F1Report, LabelVector, Prf, RougeScore};
use crate::prompting::{build_prompt, select_shots, Ablation, PromptConfig, TestInput};
use crate::retrieval::build_index;

/// A prompt variant: which inputs are shown and how many shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub ablation: Ablation,
    pub shots: usize,
}

/// One generated impression and its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub rate: f64,
    pub ablation: Ablation,
    pub shots: usize,
    pub id: String,
    pub prompt_hash: String,
    pub shot_ids: Vec<String>,
    pub generation: String,
    pub reference: String,
    pub rouge: RougeScore,
    pub predicted_labels: LabelVector,
    pub reference_labels: LabelVector,
}

impl RecordRow {
    pub fn condition(&self) -> Condition {
        Condition { ablation: self.ablation, shots: self.shots }
    }
}

/// Mean ROUGE-L scores over a condition's rows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanRouge {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub rate: f64,
    pub ablation: Ablation,
    pub shots: usize,
    pub records: usize,
    pub rouge: MeanRouge,
    pub labels: F1Report,
}

impl ConditionSummary {
    pub fn condition(&self) -> Condition {
        Condition { ablation: self.ablation, shots: self.shots }
    }

    pub fn label_micro(&self) -> Prf {
        self.labels.micro
    }
}

/// Wall-clock figures; excluded from the deterministic report files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub total: Duration,
    pub generation: Duration,
    pub requests: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub conditions: Vec<ConditionSummary>,
    pub rows: Vec<RecordRow>,
    pub stats: Option<RunStats>,
}

impl ExperimentReport {
    /// Aggregates rows per (rate, condition) in order of first appearance.
    pub fn from_rows(config: ExperimentConfig, rows: Vec<RecordRow>) -> Self {
        let mut keys: Vec<(f64, Condition)> = Vec::new();
        for row in &rows {
            let key = (row.rate, row.condition());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let conditions = keys
            .into_iter()
            .map(|(rate, cond)| {
                let group: Vec<&RecordRow> = rows.iter().filter(|r| r.rate == rate && r.condition() == cond).collect();
                let n = group.len() as f64;
                let mut sum = MeanRouge::default();
                for r in &group {
                    sum.precision += r.rouge.precision;
                    sum.recall += r.rouge.recall;
                    sum.f1 += r.rouge.f1;
                }
                let predicted: Vec<LabelVector> = group.iter().map(|r| r.predicted_labels).collect();
                let reference: Vec<LabelVector> = group.iter().map(|r| r.reference_labels).collect();
                ConditionSummary {
                    rate,
                    ablation: cond.ablation,
                    shots: cond.shots,
                    records: group.len(),
                    rouge: MeanRouge { precision: sum.precision / n, recall: sum.recall / n, f1: sum.f1 / n },
                    labels: f1_labels(&predicted, &reference).expect("paired label lists"),
                }
            })
            .collect();
        Self { config, conditions, rows, stats: None }
    }

    pub fn summary(&self, rate: f64, condition: Condition) -> Option<&ConditionSummary> {
        self.conditions.iter().find(|c| c.rate == rate && c.condition() == condition)
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

fn load_data(config: &ExperimentConfig) -> Result<(Vec<ReportRecord>, Vec<ReportRecord>), RunError> {
    match &config.data {
        DataSource::Synthetic { records, train, validation, test } => {
            let corpus = corpus::generate_synthetic(*records, config.seed)?;
            let split = corpus::split_corpus(&corpus.records, config.seed, (*train, *validation, *test))?;
            Ok((split.train, split.test))
        }
        DataSource::Files { train, test, probabilities } => {
            let mut train = corpus::load_corpus(train)?;
            let mut test = corpus::load_corpus(test)?;
            if let Some(path) = probabilities {
                let sidecar = corpus::load_probability_sidecar(path)?;
                corpus::attach_probabilities(&mut train, &sidecar);
                corpus::attach_probabilities(&mut test, &sidecar);
            }
            Ok((train, test))
        }
    }
}

/// Corrupts the test set at every rate, retrieves shots with the corrupted
/// finding, prompts the backend under every condition and scores each
/// generation against the gold impression.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    config.validate()?;
    let started = Instant::now();
    let (train, test) = load_data(config)?;
    if train.is_empty() || test.is_empty() {
        return Err(RunError::Config("train and test sets must be non-empty".into()));
    }
    log::info!("{} train / {} test records", train.len(), test.len());

    let findings: Vec<&str> = train.iter().map(|r| r.finding.as_str()).collect();
    let vocab = train_bpe(&findings, config.bpe_merges)?;
    let docs: Vec<(&str, &str)> = train.iter().map(|r| (r.id.as_str(), r.finding.as_str())).collect();
    let index = build_index(&docs, config.bm25)?;
    let sets = corrupt_test_set(&test, &config.rates, config.seed, &vocab)?;

    let conditions: Vec<Condition> = config
        .ablations
        .iter()
        .flat_map(|&ablation| config.shots.iter().map(move |&shots| Condition { ablation, shots }))
        .collect();
    let max_shots = config.shots.iter().copied().max().unwrap_or(0);
    let reference_labels: Vec<LabelVector> = test.iter().map(|r| label_text(&r.impression)).collect();

    struct Pending {
        rate: f64,
        condition: Condition,
        record: usize,
        prompt_hash: String,
        shot_ids: Vec<String>,
    }
    let mut pending = Vec::new();
    let mut requests = Vec::new();
    for set in &sets {
        for (i, record) in set.records.iter().enumerate() {
            let stage = |stage: &'static str| {
                let id = record.id.clone();
                move |e| RunError::Stage { id, stage, source: Box::new(e) }
            };
            let selection = select_shots(&index, &record.finding, max_shots, &train, config.description)
                .map_err(|e| stage("retrieval")(RunError::from(e)))?;
            let test_input = TestInput::from_record(record, config.description);
            for &condition in &conditions {
                let prompt_config = PromptConfig {
                    shots: condition.shots,
                    ablation: condition.ablation,
                    role_line: config.prompt.role_line.clone(),
                    task_description: config.prompt.task_description.clone(),
                };
                let prompt = build_prompt(&prompt_config, &selection.examples[..condition.shots], &test_input)
                    .map_err(|e| stage("prompt")(RunError::from(e)))?;
                pending.push(Pending {
                    rate: set.rate,
                    condition,
                    record: i,
                    prompt_hash: prompt_hash(&prompt.text),
                    shot_ids: prompt.shot_ids,
                });
                requests.push(GenerationRequest::new(prompt.text, record.id.clone()).with_params(config.decoding.clone()));
            }
        }
    }

    let backend = config.backend.build(config.cache_dir.as_deref())?;
    let generation_started = Instant::now();
    let responses = generate_batch(&backend, &requests, config.max_in_flight)?;
    let generation = generation_started.elapsed();

    let mut rows = Vec::with_capacity(pending.len());
    let mut cache_hits = 0;
    for (p, response) in pending.into_iter().zip(responses) {
        let gold = &test[p.record];
        let response = response.map_err(|e| RunError::Stage {
            id: gold.id.clone(),
            stage: "generation",
            source: Box::new(RunError::Backend(e)),
        })?;
        cache_hits += usize::from(response.cached);
        rows.push(RecordRow {
            rate: p.rate,
            ablation: p.condition.ablation,
            shots: p.condition.shots,
            id: gold.id.clone(),
            prompt_hash: p.prompt_hash,
            shot_ids: p.shot_ids,
            rouge: rouge_l(&response.text, &gold.impression),
            predicted_labels: label_text(&response.text),
            reference_labels: reference_labels[p.record],
            generation: response.text,
            reference: gold.impression.clone(),
        });
    }
    if cache_hits > 0 {
        log::info!("{cache_hits} of {} generations served from cache", rows.len());
    }

    let mut report = ExperimentReport::from_rows(config.clone(), rows);
    report.stats = Some(RunStats { total: started.elapsed(), generation, requests: requests.len(), cache_hits });
    Ok(report)
}
