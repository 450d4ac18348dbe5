use serde::{Deserialize, Serialize};

use super::RunError;
use crate::corpus::ReportRecord;
use crate::corruption::CorruptedSet;
use crate::metrics::{f1_labels, label_text, F1Report, LabelVector};

/// Below this many records the trend check is skipped.
pub const MIN_TREND_RECORDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub rate: f64,
    pub masked_fraction: f64,
    pub labels: F1Report,
}

impl TrendPoint {
    pub fn micro_f1(&self) -> f64 {
        self.labels.micro.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    StrictlyDecreasing,
    NotDecreasing,
    /// Too few records to judge.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionTrend {
    pub records: usize,
    /// Sorted by increasing rate.
    pub points: Vec<TrendPoint>,
    pub verdict: TrendVerdict,
}

impl CorruptionTrend {
    pub fn point(&self, rate: f64) -> Option<&TrendPoint> {
        self.points.iter().find(|p| p.rate == rate)
    }
}

/// Labels every full finding and its corrupted counterparts, scoring each
/// rate with the full-finding labels as reference.
pub fn validate_corruption(full: &[ReportRecord], sets: &[CorruptedSet]) -> Result<CorruptionTrend, RunError> {
    let reference: Vec<LabelVector> = full.iter().map(|r| label_text(&r.finding)).collect();
    let mut points = Vec::with_capacity(sets.len());
    for set in sets {
        if set.records.len() != full.len() {
            return Err(RunError::Misaligned(format!(
                "rate {} has {} records, expected {}",
                set.rate,
                set.records.len(),
                full.len()
            )));
        }
        let mut predicted = Vec::with_capacity(full.len());
        for (f, c) in full.iter().zip(&set.records) {
            if f.id != c.id {
                return Err(RunError::Misaligned(format!("rate {}: {:?} paired with {:?}", set.rate, c.id, f.id)));
            }
            predicted.push(label_text(&c.finding));
        }
        let labels = f1_labels(&predicted, &reference).map_err(|e| RunError::Misaligned(e.to_string()))?;
        points.push(TrendPoint { rate: set.rate, masked_fraction: set.masked_fraction(), labels });
    }
    points.sort_by(|a, b| a.rate.total_cmp(&b.rate));

    let verdict = if full.len() < MIN_TREND_RECORDS {
        log::warn!("only {} records; skipping the trend check (needs {MIN_TREND_RECORDS})", full.len());
        TrendVerdict::Skipped
    } else if points.windows(2).all(|w| w[0].micro_f1() > w[1].micro_f1()) {
        TrendVerdict::StrictlyDecreasing
    } else {
        TrendVerdict::NotDecreasing
    };
    Ok(CorruptionTrend { records: full.len(), points, verdict })
}
