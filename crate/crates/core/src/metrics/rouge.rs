use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub lcs_length: usize,
}

/// Whole-text ROUGE-L over lowercased alphanumeric tokens with a balanced
/// F-measure.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let lcs = lcs_length(candidate, reference);
    let ratio = |den: usize| if den == 0 { 0.0 } else { lcs as f64 / den as f64 };
    let precision = ratio(candidate.len());
    let recall = ratio(reference.len());
    RougeScore {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
        lcs_length: lcs,
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Two-row dynamic program, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
