//! Report corpora: the canonical record type, line-delimited I/O, the
//! unsuitability audit, length filtering, seeded splitting and a synthetic
//! generator standing in for restricted clinical data.

mod observation;
mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::word_count;

pub use observation::{Observation, UnknownObservation, OBSERVATION_COUNT};
pub use synthetic::{generate_synthetic, save_gold_labels, load_gold_labels, SyntheticCorpus};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("split sizes sum to {requested} but only {available} records are available")]
    SplitTooLarge { requested: usize, available: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("probability sidecar: {0}")]
    Sidecar(String),
    #[error("synthetic corpus size must be at least 1")]
    EmptySynthetic,
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// Classifier probabilities over the 14 observations, canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassifierOutput([f64; OBSERVATION_COUNT]);

impl ClassifierOutput {
    pub fn new(values: [f64; OBSERVATION_COUNT]) -> Result<Self, CorpusError> {
        for (o, v) in Observation::ALL.iter().zip(values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(CorpusError::InvalidProbabilities(format!(
                    "{o} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn get(&self, observation: Observation) -> f64 {
        self.0[observation.index()]
    }

    pub fn values(&self) -> &[f64; OBSERVATION_COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Observation, f64)> + '_ {
        Observation::ALL.into_iter().zip(self.0.iter().copied())
    }
}

impl TryFrom<Vec<f64>> for ClassifierOutput {
    type Error = CorpusError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        let values: [f64; OBSERVATION_COUNT] = values.try_into().map_err(|v: Vec<f64>| {
            CorpusError::InvalidProbabilities(format!(
                "expected {OBSERVATION_COUNT} values, got {}",
                v.len()
            ))
        })?;
        ClassifierOutput::new(values)
    }
}

impl From<ClassifierOutput> for Vec<f64> {
    fn from(p: ClassifierOutput) -> Self {
        p.0.to_vec()
    }
}

/// One study: a finding, its impression and optional classifier output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub id: String,
    pub finding: String,
    pub impression: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<ClassifierOutput>,
}

impl ReportRecord {
    pub fn new(id: impl Into<String>, finding: impl Into<String>, impression: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            finding: finding.into(),
            impression: impression.into(),
            probabilities: None,
        }
    }

    pub fn with_probabilities(mut self, probabilities: ClassifierOutput) -> Self {
        self.probabilities = Some(probabilities);
        self
    }
}

/// Disjoint train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusSplit {
    pub train: Vec<ReportRecord>,
    pub validation: Vec<ReportRecord>,
    pub test: Vec<ReportRecord>,
}

/// Parses line-delimited JSON records. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<ReportRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        for (field, value) in [("id", &record.id), ("finding", &record.finding), ("impression", &record.impression)] {
            if value.trim().is_empty() {
                return Err(CorpusError::Malformed {
                    line: line_no,
                    message: format!("empty {field}"),
                });
            }
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id: record.id });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(mut writer: W, records: &[ReportRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: impl AsRef<Path>, records: &[ReportRecord]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_corpus(BufWriter::new(file), records).map_err(|e| CorpusError::io(path, e))
}

/// Reads a CSV with header `id,atelectasis,...,support_devices`.
pub fn load_probability_sidecar(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, ClassifierOutput>, CorpusError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| CorpusError::Sidecar(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Sidecar(e.to_string()))?
        .clone();
    let expected: Vec<&str> = std::iter::once("id")
        .chain(Observation::ALL.iter().map(|o| o.key()))
        .collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CorpusError::Sidecar(format!(
            "header must be {:?}",
            expected.join(",")
        )));
    }
    let mut out = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CorpusError::Sidecar(e.to_string()))?;
        let line = i + 2;
        let values = row
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CorpusError::Sidecar(format!("line {line}: {e}")))?;
        let id = row[0].to_string();
        let probs = ClassifierOutput::try_from(values)?;
        if out.insert(id.clone(), probs).is_some() {
            return Err(CorpusError::DuplicateId { line, id });
        }
    }
    Ok(out)
}

pub fn save_probability_sidecar(path: impl AsRef<Path>, records: &[ReportRecord]) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(|e| CorpusError::Sidecar(e.to_string()))?;
    let header: Vec<&str> = std::iter::once("id")
        .chain(Observation::ALL.iter().map(|o| o.key()))
        .collect();
    writer.write_record(&header).map_err(|e| CorpusError::Sidecar(e.to_string()))?;
    for record in records {
        if let Some(p) = &record.probabilities {
            let mut row = vec![record.id.clone()];
            row.extend(p.values().iter().map(|v| v.to_string()));
            writer.write_record(&row).map_err(|e| CorpusError::Sidecar(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| CorpusError::io(path.as_ref(), e))
}

/// Joins sidecar probabilities onto records by id. Returns the number of
/// records that received a vector.
pub fn attach_probabilities(records: &mut [ReportRecord], sidecar: &HashMap<String, ClassifierOutput>) -> usize {
    let mut attached = 0;
    for record in records.iter_mut() {
        if let Some(p) = sidecar.get(&record.id) {
            record.probabilities = Some(*p);
            attached += 1;
        }
    }
    attached
}

/// Mask glyph used in corrupted text.
pub const MASK_TOKEN: char = '_';

/// Audit rule for unusable reports: a finding under three words, shorter
/// than its impression, or with more than three masked spans.
pub fn flag_unsuitable(record: &ReportRecord) -> bool {
    let finding_words = word_count(&record.finding);
    finding_words < 3
        || finding_words < word_count(&record.impression)
        || record.finding.matches(MASK_TOKEN).count() > 3
}

/// Keeps records whose finding word count lies between the lower and upper
/// quartile cut points, order preserved. With `n` records sorted by word
/// count, the cuts are the values at 0-based ranks `n/4` and `n - 1 - n/4`,
/// so a quarter of the ranks is trimmed from each end; records tied with a
/// cut value are kept.
pub fn filter_by_length_quartiles(records: &[ReportRecord]) -> Result<Vec<ReportRecord>, CorpusError> {
    let n = records.len();
    if n < 4 {
        return Err(CorpusError::TooFewRecords { needed: 4, got: n });
    }
    let counts: Vec<usize> = records.iter().map(|r| word_count(&r.finding)).collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let trim = n / 4;
    let (lower, upper) = (sorted[trim], sorted[n - 1 - trim]);
    Ok(records
        .iter()
        .zip(counts)
        .filter(|(_, c)| (lower..=upper).contains(c))
        .map(|(r, _)| r.clone())
        .collect())
}

/// Seeded shuffle followed by partition into `(train, validation, test)`
/// sized prefixes. Records past the requested total are discarded.
pub fn split_corpus(
    records: &[ReportRecord],
    seed: u64,
    sizes: (usize, usize, usize),
) -> Result<CorpusSplit, CorpusError> {
    let (train, validation, test) = sizes;
    let requested = train + validation + test;
    if requested > records.len() {
        return Err(CorpusError::SplitTooLarge { requested, available: records.len() });
    }
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId { line: i + 1, id: r.id.clone() });
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: std::ops::Range<usize>| order[range].iter().map(|&i| records[i].clone()).collect();
    Ok(CorpusSplit {
        train: take(0..train),
        validation: take(train..train + validation),
        test: take(train + validation..requested),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, finding: &str, impression: &str) -> ReportRecord {
        ReportRecord::new(id, finding, impression)
    }

    fn words(n: usize) -> String {
        vec!["w"; n].join(" ")
    }

    #[test]
    fn empty_input_loads_no_records() {
        assert!(read_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn loads_lines_in_order() {
        let text = r#"{"id":"a","finding":"f one","impression":"i one"}
{"id":"b","finding":"f two","impression":"i two"}
"#;
        let records = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn missing_finding_names_the_line() {
        let text = "{\"id\":\"a\",\"finding\":\"f\",\"impression\":\"i\"}\n{\"id\":\"b\",\"impression\":\"i\"}\n";
        match read_corpus(text.as_bytes()) {
            Err(CorpusError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("finding"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = "{\"id\":\"a\",\"finding\":\"f\",\"impression\":\"i\"}\n{\"id\":\"a\",\"finding\":\"g\",\"impression\":\"j\"}\n";
        assert!(matches!(read_corpus(text.as_bytes()), Err(CorpusError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_corpus("/nonexistent/corpus.jsonl"), Err(CorpusError::Io { .. })));
    }

    #[test]
    fn probability_vectors_must_have_fourteen_unit_values() {
        let bad_len = r#"{"id":"a","finding":"f","impression":"i","probabilities":[0.1,0.2]}"#;
        assert!(read_corpus(bad_len.as_bytes()).is_err());
        let mut vals = vec![0.0; 14];
        vals[3] = 1.5;
        assert!(ClassifierOutput::try_from(vals).is_err());
        assert!(ClassifierOutput::try_from(vec![0.5; 14]).is_ok());
    }

    #[test]
    fn unsuitable_short_finding() {
        assert!(flag_unsuitable(&rec("a", "normal chest", "ok")));
    }

    #[test]
    fn suitable_ordinary_report() {
        assert!(!flag_unsuitable(&rec("a", &words(10), "three word impression")));
    }

    #[test]
    fn unsuitable_when_finding_shorter_than_impression() {
        assert!(flag_unsuitable(&rec("a", "one two three", "one two three four")));
    }

    #[test]
    fn unsuitable_with_four_masks() {
        let finding = "PA and _ views _ the chest _ provided _ today";
        assert!(flag_unsuitable(&rec("a", finding, "ok")));
        let three = "PA and _ views _ the chest _ provided today";
        assert!(!flag_unsuitable(&rec("a", three, "ok")));
    }

    #[test]
    fn quartile_filter_keeps_middle_half() {
        let records: Vec<_> = (1..=100).map(|n| rec(&n.to_string(), &words(n), "i")).collect();
        let kept = filter_by_length_quartiles(&records).unwrap();
        let counts: Vec<usize> = kept.iter().map(|r| word_count(&r.finding)).collect();
        assert_eq!(counts, (26..=75).collect::<Vec<_>>());
    }

    #[test]
    fn quartile_filter_degenerate_distribution_keeps_everything() {
        let records: Vec<_> = (0..9).map(|n| rec(&n.to_string(), &words(7), "i")).collect();
        assert_eq!(filter_by_length_quartiles(&records).unwrap().len(), 9);
    }

    #[test]
    fn quartile_filter_needs_four_records() {
        let records: Vec<_> = (0..3).map(|n| rec(&n.to_string(), &words(7), "i")).collect();
        assert!(matches!(
            filter_by_length_quartiles(&records),
            Err(CorpusError::TooFewRecords { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let records: Vec<_> = (0..10).map(|n| rec(&format!("r{n}"), "a b c", "i")).collect();
        let a = split_corpus(&records, 7, (8, 1, 1)).unwrap();
        let b = split_corpus(&records, 7, (8, 1, 1)).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<_> = a.train.iter().chain(&a.validation).chain(&a.test).map(|r| r.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn split_rejects_oversized_request() {
        let records: Vec<_> = (0..10).map(|n| rec(&format!("r{n}"), "a b c", "i")).collect();
        assert!(matches!(
            split_corpus(&records, 7, (8, 2, 1)),
            Err(CorpusError::SplitTooLarge { requested: 11, available: 10 })
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.csv");
        let mut values = [0.0; 14];
        values[0] = 0.242;
        values[13] = 1.0;
        let records = vec![rec("x", "a b c", "i").with_probabilities(ClassifierOutput::new(values).unwrap())];
        save_probability_sidecar(&path, &records).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("id,atelectasis,cardiomegaly,"));
        let map = load_probability_sidecar(&path).unwrap();
        let mut bare = vec![rec("x", "a b c", "i"), rec("y", "d e f", "j")];
        assert_eq!(attach_probabilities(&mut bare, &map), 1);
        assert_eq!(bare[0], records[0]);
        assert!(bare[1].probabilities.is_none());
    }
}
