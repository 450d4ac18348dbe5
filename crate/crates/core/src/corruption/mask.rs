use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bpe::{segment, Piece, SubwordVocab};
use super::CorruptionError;
use crate::corpus::MASK_TOKEN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedText {
    pub text: String,
    pub rate: f64,
    pub seed: u64,
    pub masked_count: usize,
    pub total_count: usize,
}

pub(crate) fn check_rate(rate: f64) -> Result<(), CorruptionError> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(CorruptionError::InvalidRate(rate))
    }
}

/// Selects each subword independently with probability `rate` and
/// replaces every maximal run of selected subwords with one mask glyph.
///
/// Whitespace inside a run is absorbed; whitespace bordering unmasked text
/// is kept, so a run covering whole words renders as a free-standing `_`
/// and a run inside a word renders glued (`ventric_`).
pub fn mask(text: &str, rate: f64, seed: u64, vocab: &SubwordVocab) -> Result<MaskedText, CorruptionError> {
    check_rate(rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segmentation = segment(text, vocab);

    let mut out = String::with_capacity(text.len());
    let mut pending_space: Option<&str> = None;
    let mut in_run = false;
    let (mut masked_count, mut total_count) = (0, 0);
    for piece in &segmentation.pieces {
        match piece {
            Piece::Space(s) => pending_space = Some(s),
            Piece::Subword(sub) => {
                total_count += 1;
                // one draw per subword keeps selections nested across rates
                let selected = rng.random::<f64>() < rate;
                if selected {
                    masked_count += 1;
                    if !in_run {
                        out.extend(pending_space.take());
                        out.push(MASK_TOKEN);
                        in_run = true;
                    }
                    pending_space = None;
                } else {
                    out.extend(pending_space.take());
                    out.push_str(&sub.text);
                    in_run = false;
                }
            }
        }
    }
    out.extend(pending_space);
    Ok(MaskedText { text: out, rate, seed, masked_count, total_count })
}
