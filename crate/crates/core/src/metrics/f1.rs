use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::labeler::LabelVector;
use super::rouge::harmonic_mean;
use crate::corpus::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{predicted} predicted label vectors vs {reference} reference vectors")]
pub struct LengthMismatch {
    pub predicted: usize,
    pub reference: usize,
}

/// Positive-class confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn scores(&self) -> Prf {
        Prf::from_counts(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// With no positives on either side every score is 1.0.
    pub fn from_counts(c: Counts) -> Self {
        if c.tp + c.fp + c.fn_ == 0 {
            return Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        Prf { precision, recall, f1: harmonic_mean(precision, recall) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Reference positives.
    pub support: usize,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub micro: Prf,
    pub per_observation: BTreeMap<Observation, ObservationScore>,
}

impl F1Report {
    pub fn observation(&self, o: Observation) -> &ObservationScore {
        &self.per_observation[&o]
    }
}

pub fn f1_labels(predicted: &[LabelVector], reference: &[LabelVector]) -> Result<F1Report, LengthMismatch> {
    if predicted.len() != reference.len() {
        return Err(LengthMismatch { predicted: predicted.len(), reference: reference.len() });
    }
    let mut micro = Counts::default();
    let mut per_observation = BTreeMap::new();
    for o in Observation::ALL {
        let mut c = Counts::default();
        for (p, r) in predicted.iter().zip(reference) {
            match (p.is_positive(o), r.is_positive(o)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
        micro.add(c);
        let s = c.scores();
        per_observation.insert(
            o,
            ObservationScore {
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
                support: c.tp + c.fn_,
                counts: c,
            },
        );
    }
    Ok(F1Report { micro: micro.scores(), per_observation })
}
