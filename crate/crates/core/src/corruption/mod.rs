//! Controlled subword corruption of findings.

mod bpe;
mod mask;

use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::corpus::ReportRecord;

pub use bpe::{segment, train_bpe, Piece, Segmentation, Subword, SubwordVocab};
pub use mask::{mask, MaskedText};

/// Merge count used when none is configured.
pub const DEFAULT_MERGES: usize = 1_000;

/// Rates of the standard corrupted test sets.
pub const STANDARD_RATES: [f64; 3] = [0.1, 0.3, 0.5];

#[derive(Debug, thiserror::Error)]
pub enum CorruptionError {
    #[error("cannot train a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("masking rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("vocabulary file: {0}")]
    VocabFormat(String),
    #[error("record {id}: {source}")]
    Record {
        id: String,
        #[source]
        source: Box<CorruptionError>,
    },
}

/// Test records corrupted at one rate; impressions are untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptedSet {
    pub rate: f64,
    pub records: Vec<ReportRecord>,
    pub masked_count: usize,
    pub total_count: usize,
}

impl CorruptedSet {
    pub fn masked_fraction(&self) -> f64 {
        if self.total_count == 0 {
            0.0
        } else {
            self.masked_count as f64 / self.total_count as f64
        }
    }
}

/// Mask seed for one record: a mix of the global seed and a hash of the
/// record id, independent of the record's position.
pub fn record_seed(seed: u64, id: &str) -> u64 {
    let mut h = Fnv1a::default();
    h.write(id.as_bytes());
    splitmix64(seed ^ splitmix64(h.finish()))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// One corrupted copy of `records` per rate, in the order given. Rate 0
/// returns the findings unchanged.
pub fn corrupt_test_set(
    records: &[ReportRecord],
    rates: &[f64],
    seed: u64,
    vocab: &SubwordVocab,
) -> Result<Vec<CorruptedSet>, CorruptionError> {
    rates.iter().try_for_each(|&r| mask::check_rate(r))?;
    rates
        .iter()
        .map(|&rate| {
            let mut set = CorruptedSet { rate, records: Vec::with_capacity(records.len()), masked_count: 0, total_count: 0 };
            for record in records {
                let masked = mask(&record.finding, rate, record_seed(seed, &record.id), vocab).map_err(|e| {
                    CorruptionError::Record { id: record.id.clone(), source: Box::new(e) }
                })?;
                set.masked_count += masked.masked_count;
                set.total_count += masked.total_count;
                let mut corrupted = record.clone();
                if rate > 0.0 {
                    corrupted.finding = masked.text;
                }
                set.records.push(corrupted);
            }
            Ok(set)
        })
        .collect()
}

/// `test.corrupted-<rate>.jsonl`
pub fn corrupted_file_name(rate: f64) -> String {
    format!("test.corrupted-{rate}.jsonl")
}

/// Inverse of [`corrupted_file_name`].
pub fn rate_from_file_name(name: &str) -> Option<f64> {
    name.strip_prefix("test.corrupted-")?
        .strip_suffix(".jsonl")?
        .parse()
        .ok()
        .filter(|r| (0.0..=1.0).contains(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<ReportRecord> {
        crate::corpus::generate_synthetic(30, 4).unwrap().records
    }

    fn vocab_for(records: &[ReportRecord]) -> SubwordVocab {
        let findings: Vec<&str> = records.iter().map(|r| r.finding.as_str()).collect();
        train_bpe(&findings, 200).unwrap()
    }

    #[test]
    fn one_set_per_rate_with_same_size() {
        let recs = records();
        let sets = corrupt_test_set(&recs, &STANDARD_RATES, 1, &vocab_for(&recs)).unwrap();
        assert_eq!(sets.len(), 3);
        for set in &sets {
            assert_eq!(set.records.len(), recs.len());
            for (a, b) in set.records.iter().zip(&recs) {
                assert_eq!(a.impression, b.impression);
                assert_eq!(a.id, b.id);
            }
        }
    }

    #[test]
    fn rate_zero_keeps_findings() {
        let recs = records();
        let sets = corrupt_test_set(&recs, &[0.0], 1, &vocab_for(&recs)).unwrap();
        assert_eq!(sets[0].records, recs);
    }

    #[test]
    fn repeatable_and_stable_under_reordering() {
        let recs = records();
        let vocab = vocab_for(&recs);
        let a = corrupt_test_set(&recs, &[0.3], 5, &vocab).unwrap();
        assert_eq!(a, corrupt_test_set(&recs, &[0.3], 5, &vocab).unwrap());
        let reversed: Vec<_> = recs.iter().rev().cloned().collect();
        let b = corrupt_test_set(&reversed, &[0.3], 5, &vocab).unwrap();
        let mut b_records = b[0].records.clone();
        b_records.reverse();
        assert_eq!(a[0].records, b_records);
    }

    #[test]
    fn invalid_rate_is_rejected_before_work() {
        let recs = records();
        assert!(matches!(
            corrupt_test_set(&recs, &[0.1, 2.0], 1, &vocab_for(&recs)),
            Err(CorruptionError::InvalidRate(_))
        ));
    }

    #[test]
    fn file_names_round_trip() {
        for r in [0.0, 0.1, 0.3, 0.5] {
            assert_eq!(rate_from_file_name(&corrupted_file_name(r)), Some(r));
        }
        assert_eq!(corrupted_file_name(0.1), "test.corrupted-0.1.jsonl");
        assert_eq!(rate_from_file_name("train.jsonl"), None);
    }
}
