//! Rule-based observation labeler: lexicon phrase matching plus a
//! pre-mention negation window bounded by the sentence and reset by
//! contrastive conjunctions.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{Observation, OBSERVATION_COUNT};
use crate::text::tokenize;

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");

pub const NEGATION_CUES: &[&str] = &[
    "no",
    "not",
    "without",
    "no evidence of",
    "free of",
    "absence of",
    "negative for",
    "clear of",
];

pub const SCOPE_RESETS: &[&str] = &["but", "however"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelStatus {
    Positive,
    Negative,
    #[default]
    Unmentioned,
}

impl LabelStatus {
    fn code(self) -> char {
        match self {
            LabelStatus::Positive => 'P',
            LabelStatus::Negative => 'N',
            LabelStatus::Unmentioned => '-',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'P' => Some(LabelStatus::Positive),
            'N' => Some(LabelStatus::Negative),
            '-' => Some(LabelStatus::Unmentioned),
            _ => None,
        }
    }
}

/// Status of every observation for one text. Serializes as a 14-character
/// code string in canonical order: `P` positive, `N` negative, `-`
/// unmentioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LabelVector([LabelStatus; OBSERVATION_COUNT]);

impl LabelVector {
    pub fn unmentioned() -> Self {
        Self::default()
    }

    pub fn get(&self, observation: Observation) -> LabelStatus {
        self.0[observation.index()]
    }

    pub fn set(&mut self, observation: Observation, status: LabelStatus) {
        self.0[observation.index()] = status;
    }

    pub fn is_positive(&self, observation: Observation) -> bool {
        self.get(observation) == LabelStatus::Positive
    }

    pub fn iter(&self) -> impl Iterator<Item = (Observation, LabelStatus)> + '_ {
        Observation::ALL.into_iter().zip(self.0.iter().copied())
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.code()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid label code string {0:?}")]
pub struct InvalidLabelCode(pub String);

impl FromStr for LabelVector {
    type Err = InvalidLabelCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let statuses: Vec<LabelStatus> = s
            .chars()
            .map(LabelStatus::from_code)
            .collect::<Option<_>>()
            .ok_or_else(|| InvalidLabelCode(s.to_string()))?;
        let arr: [LabelStatus; OBSERVATION_COUNT] =
            statuses.try_into().map_err(|_| InvalidLabelCode(s.to_string()))?;
        Ok(LabelVector(arr))
    }
}

impl TryFrom<String> for LabelVector {
    type Error = InvalidLabelCode;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<LabelVector> for String {
    fn from(v: LabelVector) -> Self {
        v.to_string()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Observation phrase list. Text format: one `observation<TAB>phrase` per
/// line; blank lines and `#` comments are ignored.
#[derive(Debug, Clone)]
pub struct Lexicon {
    // first token -> (phrase tokens, observation), longest phrases first
    by_first: HashMap<String, Vec<(Vec<String>, Observation)>>,
    len: usize,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut by_first: HashMap<String, Vec<(Vec<String>, Observation)>> = HashMap::new();
        let mut len = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| LexiconError::Malformed { line: i + 1, message };
            let (obs, phrase) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected observation<TAB>phrase".into()))?;
            let observation: Observation = obs.parse().map_err(|e: crate::corpus::UnknownObservation| malformed(e.to_string()))?;
            let tokens = tokenize(phrase);
            if tokens.is_empty() {
                return Err(malformed("empty phrase".into()));
            }
            by_first.entry(tokens[0].clone()).or_default().push((tokens, observation));
            len += 1;
        }
        for entries in by_first.values_mut() {
            entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        Ok(Self { by_first, len })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Longest phrase starting at `tokens[start]`.
    fn longest_match(&self, tokens: &[String], start: usize) -> Option<(usize, Observation)> {
        self.by_first.get(&tokens[start])?.iter().find_map(|(phrase, obs)| {
            let end = start + phrase.len();
            (end <= tokens.len() && tokens[start..end] == phrase[..]).then_some((phrase.len(), *obs))
        })
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }
}

/// One lexicon hit inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub observation: Observation,
    pub sentence: usize,
    pub negated: bool,
}

#[derive(Debug, Clone)]
pub struct Labeler {
    lexicon: Lexicon,
    cues: Vec<Vec<String>>,
    resets: Vec<String>,
}

impl Default for Labeler {
    fn default() -> Self {
        Self::new(Lexicon::default())
    }
}

impl Labeler {
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            cues: NEGATION_CUES.iter().map(|c| tokenize(c)).collect(),
            resets: SCOPE_RESETS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn mentions(&self, text: &str) -> Vec<Mention> {
        let mut out = Vec::new();
        for (sentence_no, sentence) in split_sentences(text).into_iter().enumerate() {
            let tokens = tokenize(sentence);
            let mut scope_start = 0;
            let mut i = 0;
            while i < tokens.len() {
                if self.resets.contains(&tokens[i]) {
                    scope_start = i + 1;
                    i += 1;
                    continue;
                }
                match self.lexicon.longest_match(&tokens, i) {
                    Some((len, observation)) => {
                        out.push(Mention {
                            observation,
                            sentence: sentence_no,
                            negated: self.has_cue(&tokens[scope_start..i]),
                        });
                        i += len;
                    }
                    None => i += 1,
                }
            }
        }
        out
    }

    /// Positive wins over negative when an observation is mentioned more
    /// than once.
    pub fn label(&self, text: &str) -> LabelVector {
        let mut labels = LabelVector::unmentioned();
        for m in self.mentions(text) {
            let status = if m.negated { LabelStatus::Negative } else { LabelStatus::Positive };
            if labels.get(m.observation) != LabelStatus::Positive {
                labels.set(m.observation, status);
            }
        }
        labels
    }

    fn has_cue(&self, window: &[String]) -> bool {
        self.cues
            .iter()
            .any(|cue| window.windows(cue.len()).any(|w| w == &cue[..]))
    }
}

/// Labels `text` with the bundled lexicon.
pub fn label_text(text: &str) -> LabelVector {
    static DEFAULT: OnceLock<Labeler> = OnceLock::new();
    DEFAULT.get_or_init(Labeler::default).label(text)
}

/// Sentence spans. Periods only end a sentence when followed by whitespace
/// or end of text, so decimals stay intact.
fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let boundary = match c {
            '!' | '?' | ';' | '\n' => true,
            '.' => chars.peek().is_none_or(|(_, next)| next.is_whitespace()),
            _ => false,
        };
        if boundary {
            out.push(&text[start..i]);
            start = i + c.len_utf8();
        }
    }
    out.push(&text[start..]);
    out.retain(|s| !s.trim().is_empty());
    out
}
