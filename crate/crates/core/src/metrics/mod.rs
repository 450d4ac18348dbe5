//! Output scoring: ROUGE-L and rule-based observation label F1.

mod f1;
mod labeler;
mod rouge;

pub use f1::{f1_labels, Counts, F1Report, LengthMismatch, ObservationScore, Prf};
pub use labeler::{
    label_text, InvalidLabelCode, LabelStatus, LabelVector, Labeler, Lexicon, LexiconError, Mention,
    NEGATION_CUES, SCOPE_RESETS,
};
pub use rouge::{lcs_length, rouge_l, rouge_l_tokens, RougeScore};
