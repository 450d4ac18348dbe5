//! Seeded synthetic report generator.
//!
//! Findings are assembled from sentence templates that mention observations
//! positively or under a leading negation, padded with neutral filler. Every
//! record carries its planted label vector so tests can check labelers and
//! classifier thresholds against ground truth.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierOutput, CorpusError, Observation, ReportRecord, OBSERVATION_COUNT};
use crate::metrics::{LabelStatus, LabelVector};
use crate::text::word_count;

const MIN_FINDING_WORDS: usize = 30;
const MAX_FINDING_WORDS: usize = 120;
const POSITIVE_THRESHOLD: f64 = 0.2;

const INTRO: &[&str] = &[
    "PA and lateral views of the chest provided.",
    "Frontal and lateral radiographs of the chest were obtained.",
    "Single portable AP view of the chest was obtained.",
    "PA and lateral chest radiographs were reviewed in comparison to the prior study.",
];

const FILLER: &[&str] = &[
    "The hilar and mediastinal contours are unremarkable.",
    "The visualized osseous structures are intact.",
    "Bony structures are intact.",
    "The trachea is midline.",
    "Lung volumes are slightly low.",
    "The aorta is mildly tortuous and calcified.",
    "Degenerative changes are noted in the thoracic spine.",
    "Surgical clips project over the right upper quadrant.",
    "The lungs are well expanded.",
    "The cardiomediastinal silhouette is within normal limits.",
    "The upper abdomen is unremarkable.",
    "Overlying soft tissues are within normal limits.",
    "The diaphragms are well defined bilaterally.",
    "Comparison is made to the radiograph from the prior day.",
    "Patient rotation limits assessment of the mediastinum.",
    "The pulmonary vasculature is within normal limits.",
    "Costophrenic angles are sharp.",
    "Both hemidiaphragms are in normal position.",
];

const SEVERITY: &[&str] = &["Mild", "Moderate", "Small", "Minimal", "Trace"];

fn positive_templates(o: Observation) -> &'static [&'static str] {
    use Observation::*;
    match o {
        Atelectasis => &[
            "{Sev} bibasilar atelectasis is present.",
            "There is {sev} atelectasis at the left lung base.",
            "Linear atelectasis is seen in the right lower lobe.",
        ],
        Cardiomegaly => &[
            "The heart is mildly enlarged.",
            "There is {sev} cardiomegaly.",
            "Cardiomegaly is again noted.",
        ],
        Consolidation => &[
            "There is a focal consolidation in the right lower lobe.",
            "{Sev} consolidation is seen at the left base.",
        ],
        Edema => &[
            "{Sev} pulmonary edema is present.",
            "There is {sev} interstitial edema.",
            "Findings are consistent with mild CHF.",
        ],
        EnlargedCardiomediastinum => &[
            "The mediastinum is widened.",
            "There is mediastinal widening.",
        ],
        Fracture => &[
            "An old healed fracture of the left sixth rib is seen.",
            "There is a displaced fracture of the right clavicle.",
        ],
        LungLesion => &[
            "A small nodule is seen in the right upper lobe.",
            "There is a spiculated mass in the left upper lobe.",
        ],
        LungOpacity => &[
            "There is a patchy opacity in the left lower lobe.",
            "Bilateral hazy opacities are present.",
        ],
        NoFinding => &["No acute cardiopulmonary process.", "Normal chest radiograph."],
        PleuralEffusion => &[
            "{Sev} left pleural effusion is seen.",
            "Moderate pleural effusion is seen.",
            "There is a small right effusion.",
        ],
        PleuralOther => &[
            "Pleural thickening is noted at the right apex.",
            "Calcified pleural plaques are present.",
        ],
        Pneumonia => &[
            "Findings are concerning for pneumonia.",
            "This may represent early pneumonia.",
        ],
        Pneumothorax => &[
            "There is a small right apical pneumothorax.",
            "A {sev} left pneumothorax is present.",
        ],
        SupportDevices => &[
            "A right PICC line terminates in the mid SVC.",
            "An endotracheal tube is in standard position.",
            "A left-sided pacemaker is in place.",
        ],
    }
}

fn negative_phrase(o: Observation) -> &'static str {
    use Observation::*;
    match o {
        Atelectasis => "atelectasis",
        Cardiomegaly => "cardiomegaly",
        Consolidation => "focal consolidation",
        Edema => "pulmonary edema",
        EnlargedCardiomediastinum => "widened mediastinum",
        Fracture => "acute rib fracture",
        LungLesion => "pulmonary nodule",
        LungOpacity => "focal opacity",
        NoFinding => unreachable!("no finding is never planted negative"),
        PleuralEffusion => "pleural effusion",
        PleuralOther => "pleural thickening",
        Pneumonia => "pneumonia",
        Pneumothorax => "pneumothorax",
        SupportDevices => "support devices",
    }
}

const NEGATIVE_TEMPLATES: &[&str] = &[
    "There is no evidence of {p}.",
    "No {p} is seen.",
    "No {p}.",
    "Negative for {p}.",
    "The lungs are clear without {p}.",
];

fn impression_phrase(o: Observation) -> &'static str {
    use Observation::*;
    match o {
        Atelectasis => "Bibasilar atelectasis.",
        Cardiomegaly => "Mild cardiomegaly.",
        Consolidation => "Right lower lobe consolidation.",
        Edema => "Mild pulmonary edema.",
        EnlargedCardiomediastinum => "Widened mediastinum.",
        Fracture => "Healed rib fracture.",
        LungLesion => "Pulmonary nodule, recommend CT for further evaluation.",
        LungOpacity => "Patchy opacity.",
        NoFinding => "No acute cardiopulmonary process.",
        PleuralEffusion => "Small pleural effusion.",
        PleuralOther => "Pleural thickening.",
        Pneumonia => "Findings concerning for pneumonia.",
        Pneumothorax => "Small pneumothorax.",
        SupportDevices => "Support devices in place.",
    }
}

/// Records plus planted labels, aligned by position.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<ReportRecord>,
    pub gold: Vec<LabelVector>,
}

/// Generates `n` reports deterministically from `seed`.
pub fn generate_synthetic(n: usize, seed: u64) -> Result<SyntheticCorpus, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptySynthetic);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let mut gold = Vec::with_capacity(n);
    for i in 0..n {
        let (record, labels) = synthesize_one(&mut rng, format!("syn-{i:06}"));
        records.push(record);
        gold.push(labels);
    }
    Ok(SyntheticCorpus { records, gold })
}

fn fill_severity(template: &str, rng: &mut ChaCha8Rng) -> String {
    let sev = SEVERITY.choose(rng).expect("non-empty");
    template
        .replace("{Sev}", sev)
        .replace("{sev}", &sev.to_lowercase())
}

fn synthesize_one(rng: &mut ChaCha8Rng, id: String) -> (ReportRecord, LabelVector) {
    let mut candidates: Vec<Observation> = Observation::ALL
        .into_iter()
        .filter(|&o| o != Observation::NoFinding)
        .collect();
    candidates.shuffle(rng);
    let n_pos = [0, 1, 1, 2, 2, 3].choose(rng).copied().unwrap_or(1);
    let n_neg = rng.random_range(1..=4);
    let positives = &candidates[..n_pos];
    let negatives = &candidates[n_pos..n_pos + n_neg];

    let mut labels = LabelVector::unmentioned();
    let mut mention_sentences = Vec::new();
    for &o in positives {
        labels.set(o, LabelStatus::Positive);
        let t = positive_templates(o).choose(rng).expect("non-empty");
        mention_sentences.push(fill_severity(t, rng));
    }
    if positives.is_empty() {
        labels.set(Observation::NoFinding, LabelStatus::Positive);
        let t = positive_templates(Observation::NoFinding).choose(rng).expect("non-empty");
        mention_sentences.push(t.to_string());
    }
    for &o in negatives {
        labels.set(o, LabelStatus::Negative);
        let t = NEGATIVE_TEMPLATES.choose(rng).expect("non-empty");
        mention_sentences.push(t.replace("{p}", negative_phrase(o)));
    }
    mention_sentences.shuffle(rng);

    let intro = INTRO.choose(rng).expect("non-empty").to_string();
    let mut fillers: Vec<&str> = FILLER.to_vec();
    fillers.shuffle(rng);
    let target = rng.random_range(MIN_FINDING_WORDS..=MAX_FINDING_WORDS - 10);
    let mut sentences = vec![intro];
    let mut words: usize = mention_sentences.iter().map(|s| word_count(s)).sum::<usize>() + word_count(&sentences[0]);
    let mut extra = Vec::new();
    for f in fillers {
        let w = word_count(f);
        if words >= target || words + w > MAX_FINDING_WORDS {
            break;
        }
        words += w;
        extra.push(f.to_string());
    }
    // interleave filler among the observation sentences
    let mut body: Vec<String> = mention_sentences.into_iter().chain(extra).collect();
    body[..].shuffle(rng);
    sentences.extend(body);
    let finding = sentences.join(" ");

    let mut impression: Vec<String> = positives.iter().take(2).map(|&o| impression_phrase(o).to_string()).collect();
    if positives.is_empty() {
        impression.push(impression_phrase(Observation::NoFinding).to_string());
    }
    if impression.len() < 3 && rng.random_bool(0.5) {
        if let Some(&o) = negatives.first() {
            impression.push(format!("No {}.", negative_phrase(o)));
        }
    }

    let mut probs = [0.0; OBSERVATION_COUNT];
    for (o, status) in labels.iter() {
        probs[o.index()] = if status == LabelStatus::Positive {
            let p = round4(POSITIVE_THRESHOLD + (1.0 - POSITIVE_THRESHOLD) * (1.0 - rng.random::<f64>()));
            if p > POSITIVE_THRESHOLD { p } else { 0.2001 }
        } else {
            round4(POSITIVE_THRESHOLD * rng.random::<f64>())
        };
    }
    let probabilities = ClassifierOutput::new(probs).expect("probabilities in range by construction");
    let record = ReportRecord::new(id, finding, impression.join(" ")).with_probabilities(probabilities);
    (record, labels)
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[derive(Serialize, Deserialize)]
struct GoldLine {
    id: String,
    labels: LabelVector,
}

/// Writes `{"id": ..., "labels": "P--N..."}` lines.
pub fn save_gold_labels(path: impl AsRef<Path>, corpus: &SyntheticCorpus) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |e| CorpusError::Io { path: path.to_path_buf(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (record, labels) in corpus.records.iter().zip(&corpus.gold) {
        let line = GoldLine { id: record.id.clone(), labels: *labels };
        serde_json::to_writer(&mut w, &line).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_gold_labels(path: impl AsRef<Path>) -> Result<Vec<(String, LabelVector)>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let g: GoldLine = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((g.id, g.labels));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::flag_unsuitable;
    use crate::metrics::label_text;

    #[test]
    fn zero_records_is_an_error() {
        assert!(matches!(generate_synthetic(0, 1), Err(CorpusError::EmptySynthetic)));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_synthetic(1, 42).unwrap(), generate_synthetic(1, 42).unwrap());
        assert_eq!(generate_synthetic(20, 9).unwrap(), generate_synthetic(20, 9).unwrap());
        assert_ne!(generate_synthetic(5, 1).unwrap(), generate_synthetic(5, 2).unwrap());
    }

    #[test]
    fn probabilities_agree_with_planted_labels() {
        let corpus = generate_synthetic(500, 3).unwrap();
        for (record, gold) in corpus.records.iter().zip(&corpus.gold) {
            let probs = record.probabilities.expect("synthetic records carry probabilities");
            for (o, p) in probs.iter() {
                assert_eq!(p > 0.2, gold.is_positive(o), "{} {o}: {p}", record.id);
            }
        }
    }

    #[test]
    fn findings_have_bounded_length_and_pass_the_audit() {
        let corpus = generate_synthetic(300, 11).unwrap();
        for r in &corpus.records {
            let w = word_count(&r.finding);
            assert!((MIN_FINDING_WORDS..=MAX_FINDING_WORDS).contains(&w), "{}: {w} words", r.id);
            let sentences = r.impression.matches('.').count();
            assert!((1..=3).contains(&sentences), "{}", r.impression);
            assert!(!flag_unsuitable(r));
        }
    }

    #[test]
    fn labeler_recovers_planted_labels() {
        let corpus = generate_synthetic(300, 5).unwrap();
        for (record, gold) in corpus.records.iter().zip(&corpus.gold) {
            assert_eq!(label_text(&record.finding), *gold, "{}", record.finding);
        }
    }

    #[test]
    fn gold_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.jsonl");
        let corpus = generate_synthetic(4, 8).unwrap();
        save_gold_labels(&path, &corpus).unwrap();
        let loaded = load_gold_labels(&path).unwrap();
        assert_eq!(loaded.len(), 4);
        assert_eq!(loaded[2], (corpus.records[2].id.clone(), corpus.gold[2]));
    }
}
