//! Prompt assembly: role line and task description, retrieved shots, and
//! the test stub ending in `Impression:`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::ReportRecord;
use crate::description::{describe, DescriptionMode};
use crate::retrieval::Bm25Index;
use crate::text::collapse_whitespace;

pub const DEFAULT_ROLE_LINE: &str = "You are an expert medical professional.";

pub const DEFAULT_TASK_DESCRIPTION: &str = "Write a concise summary of the following chest X-ray report. \
The text description of the X-ray images and the full report, named \"Finding\" will be provided. \
Focus on the key findings and diagnoses noted primarily in the image description, while also \
incorporating relevant details from the full report. The summary, named \"Impression\", should be \
concise and presented in correct English sentences.";

pub const DEFAULT_SHOTS: usize = 2;

const IMAGE_LABEL: &str = "Image description:";
const FINDING_LABEL: &str = "Finding:";
const IMPRESSION_LABEL: &str = "Impression:";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("config asks for {expected} shots but {got} were supplied")]
    ShotCountMismatch { expected: usize, got: usize },
    #[error("shot {index} has an empty impression")]
    EmptyImpression { index: usize },
    #[error("{block} has neither an image description nor a finding under ablation {ablation}")]
    MissingInput { block: String, ablation: Ablation },
    #[error("requested {k} shots from a training set of {available}")]
    TooManyShots { k: usize, available: usize },
    #[error("training record at ordinal {ordinal} is {found:?} but the index expects {expected:?}")]
    MisalignedTrain { ordinal: usize, expected: String, found: String },
    #[error("unknown ablation {0:?}")]
    UnknownAblation(String),
}

/// Which inputs appear in shots and the test block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    NoText,
    NoImage,
    NoTextNoImage,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::NoText, Ablation::NoImage, Ablation::NoTextNoImage];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoText => "no_text",
            Ablation::NoImage => "no_image",
            Ablation::NoTextNoImage => "no_text_no_image",
        }
    }

    /// Row label used in report tables.
    pub fn table_label(self) -> &'static str {
        match self {
            Ablation::Full => "image + text",
            Ablation::NoText => "w/o text",
            Ablation::NoImage => "w/o image",
            Ablation::NoTextNoImage => "w/o text and image",
        }
    }

    pub fn includes_text(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoImage)
    }

    pub fn includes_image(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoText)
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| PromptError::UnknownAblation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub shots: usize,
    pub ablation: Ablation,
    pub role_line: String,
    pub task_description: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            ablation: Ablation::Full,
            role_line: DEFAULT_ROLE_LINE.to_string(),
            task_description: DEFAULT_TASK_DESCRIPTION.to_string(),
        }
    }
}

impl PromptConfig {
    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }
}

/// A retrieved training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub id: String,
    pub image_description: Option<String>,
    pub finding: Option<String>,
    pub impression: String,
}

/// The test sample: everything but the impression.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestInput {
    pub image_description: Option<String>,
    pub finding: Option<String>,
}

impl TestInput {
    pub fn from_record(record: &ReportRecord, mode: DescriptionMode) -> Self {
        Self {
            image_description: record.probabilities.as_ref().map(|p| describe(p, mode)),
            finding: Some(record.finding.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub shot_ids: Vec<String>,
    pub config: PromptConfig,
}

fn render_block(
    description: Option<&str>,
    finding: Option<&str>,
    impression: Option<&str>,
    ablation: Ablation,
    block: impl FnOnce() -> String,
) -> Result<String, PromptError> {
    let mut lines = Vec::new();
    if ablation.includes_image() {
        if let Some(d) = description {
            let body: Vec<&str> = d.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            if !body.is_empty() {
                lines.push(format!("{IMAGE_LABEL} {}", body.join("\n")));
            }
        }
    }
    if ablation.includes_text() {
        if let Some(f) = finding.map(collapse_whitespace).filter(|f| !f.is_empty()) {
            lines.push(format!("{FINDING_LABEL} {f}"));
        }
    }
    if lines.is_empty() && ablation != Ablation::NoTextNoImage {
        return Err(PromptError::MissingInput { block: block(), ablation });
    }
    lines.push(match impression {
        Some(i) => format!("{IMPRESSION_LABEL} {}", collapse_whitespace(i)),
        None => IMPRESSION_LABEL.to_string(),
    });
    Ok(lines.join("\n"))
}

/// Renders header, shots and test block separated by blank lines. Free-text
/// fields are whitespace-collapsed so the blank-line structure is
/// unambiguous.
pub fn build_prompt(config: &PromptConfig, shots: &[FewShotExample], test: &TestInput) -> Result<Prompt, PromptError> {
    if shots.len() != config.shots {
        return Err(PromptError::ShotCountMismatch { expected: config.shots, got: shots.len() });
    }
    let mut blocks = vec![collapse_whitespace(&format!("{} {}", config.role_line, config.task_description))];
    for (index, shot) in shots.iter().enumerate() {
        if shot.impression.trim().is_empty() {
            return Err(PromptError::EmptyImpression { index });
        }
        blocks.push(render_block(
            shot.image_description.as_deref(),
            shot.finding.as_deref(),
            Some(&shot.impression),
            config.ablation,
            || format!("shot {index} ({})", shot.id),
        )?);
    }
    blocks.push(render_block(
        test.image_description.as_deref(),
        test.finding.as_deref(),
        None,
        config.ablation,
        || "test block".to_string(),
    )?);
    Ok(Prompt {
        text: blocks.join("\n\n"),
        shot_ids: shots.iter().map(|s| s.id.clone()).collect(),
        config: config.clone(),
    })
}

/// Shots chosen for one query, most similar first.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSelection {
    /// The exact text used as the retrieval query.
    pub query: String,
    pub examples: Vec<FewShotExample>,
    pub scores: Vec<f64>,
}

/// Retrieves the top-`k` training records for `query_finding` and turns
/// them into examples. `train` must be the slice the index was built from.
pub fn select_shots(
    index: &Bm25Index,
    query_finding: &str,
    k: usize,
    train: &[ReportRecord],
    mode: DescriptionMode,
) -> Result<ShotSelection, PromptError> {
    if k > index.len() {
        return Err(PromptError::TooManyShots { k, available: index.len() });
    }
    log::trace!("retrieving {k} shots for query {query_finding:?}");
    let hits = index.retrieve_top_k(query_finding, k);
    let mut examples = Vec::with_capacity(hits.len());
    let mut scores = Vec::with_capacity(hits.len());
    for hit in hits {
        let record = train.get(hit.ordinal).filter(|r| r.id == hit.id).ok_or_else(|| PromptError::MisalignedTrain {
            ordinal: hit.ordinal,
            expected: hit.id.clone(),
            found: train.get(hit.ordinal).map(|r| r.id.clone()).unwrap_or_default(),
        })?;
        examples.push(FewShotExample {
            id: record.id.clone(),
            image_description: record.probabilities.as_ref().map(|p| describe(p, mode)),
            finding: Some(record.finding.clone()),
            impression: record.impression.clone(),
        });
        scores.push(hit.score);
    }
    Ok(ShotSelection { query: query_finding.to_string(), examples, scores })
}

/// Parsed structure of a rendered prompt.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromptView<'a> {
    pub header: &'a str,
    pub shots: Vec<BlockView<'a>>,
    pub test: BlockView<'a>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockView<'a> {
    pub image_description: Option<&'a str>,
    pub finding: Option<&'a str>,
    /// `Some("")` for the open test stub.
    pub impression: Option<&'a str>,
}

impl<'a> BlockView<'a> {
    fn parse(block: &'a str) -> Self {
        let mut view = BlockView::default();
        let mut description_start = None;
        let mut offset = 0;
        for line in block.split('\n') {
            let start = offset;
            offset += line.len() + 1;
            if let Some(rest) = line.strip_prefix(IMAGE_LABEL) {
                description_start = Some(start + IMAGE_LABEL.len() + (rest.len() - rest.trim_start().len()));
            } else if let Some(rest) = line.strip_prefix(FINDING_LABEL) {
                view.close_description(block, description_start.take(), start);
                view.finding = Some(rest.trim());
            } else if let Some(rest) = line.strip_prefix(IMPRESSION_LABEL) {
                view.close_description(block, description_start.take(), start);
                view.impression = Some(rest.trim());
            }
        }
        view.close_description(block, description_start, block.len() + 1);
        view
    }

    fn close_description(&mut self, block: &'a str, start: Option<usize>, end: usize) {
        if let Some(s) = start {
            self.image_description = Some(&block[s..end.saturating_sub(1).max(s)]);
        }
    }
}

/// Splits a prompt on blank lines into header, shot blocks and test block.
pub fn parse_prompt(text: &str) -> PromptView<'_> {
    let mut blocks: Vec<&str> = text.split("\n\n").collect();
    let header = if blocks.is_empty() { "" } else { blocks.remove(0) };
    let test = blocks.pop().map(BlockView::parse).unwrap_or_default();
    PromptView { header, shots: blocks.into_iter().map(BlockView::parse).collect(), test }
}
