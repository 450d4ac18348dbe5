//! Byte-pair-encoding style subword vocabulary over characters.
//!
//! Training counts adjacent symbol pairs inside whitespace-delimited words
//! (punctuation stays attached to its word) and repeatedly merges the most
//! frequent pair; ties go to the lexicographically smallest pair.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::CorruptionError;

const VOCAB_HEADER: &str = "#bpe-merges v1";
const ALPHABET_PREFIX: &str = "#alphabet ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordVocab {
    merges: Vec<(String, String)>,
    alphabet: BTreeSet<char>,
    ranks: HashMap<(String, String), usize>,
}

impl SubwordVocab {
    /// Builds a vocabulary from an explicit merge list. The alphabet is
    /// the set of characters appearing in the merges.
    pub fn from_merges<I, A, B>(merges: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let merges: Vec<(String, String)> = merges.into_iter().map(|(a, b)| (a.into(), b.into())).collect();
        let alphabet = merges.iter().flat_map(|(a, b)| a.chars().chain(b.chars())).collect();
        Self::assemble(merges, alphabet)
    }

    fn assemble(merges: Vec<(String, String)>, alphabet: BTreeSet<char>) -> Self {
        let ranks = merges.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Self { merges, alphabet, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    /// Splits one whitespace-free word into subwords by applying merges in
    /// rank order.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == left && &symbols[i + 1] == right {
                    merged.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        symbols
    }

    /// Plain-text form: a version header, the alphabet, then one
    /// space-separated merge pair per line in rank order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(VOCAB_HEADER);
        out.push('\n');
        out.push_str(ALPHABET_PREFIX);
        out.extend(self.alphabet.iter());
        out.push('\n');
        for (a, b) in &self.merges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CorruptionError> {
        let mut lines = text.lines();
        if lines.next() != Some(VOCAB_HEADER) {
            return Err(CorruptionError::VocabFormat(format!("missing header {VOCAB_HEADER:?}")));
        }
        let alphabet = lines
            .next()
            .and_then(|l| l.strip_prefix(ALPHABET_PREFIX))
            .ok_or_else(|| CorruptionError::VocabFormat("missing alphabet line".into()))?
            .chars()
            .collect();
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(' ')
                .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains(' '))
                .ok_or_else(|| CorruptionError::VocabFormat(format!("line {}: bad merge {line:?}", i + 3)))?;
            merges.push((a.to_string(), b.to_string()));
        }
        Ok(Self::assemble(merges, alphabet))
    }
}

/// Learns up to `merges` merge rules from the whitespace-delimited words of
/// `findings`. Stops early once no adjacent pair remains.
pub fn train_bpe<S: AsRef<str>>(findings: &[S], merges: usize) -> Result<SubwordVocab, CorruptionError> {
    let mut word_freq: HashMap<&str, usize> = HashMap::new();
    for f in findings {
        for w in f.as_ref().split_whitespace() {
            *word_freq.entry(w).or_default() += 1;
        }
    }
    if word_freq.is_empty() {
        return Err(CorruptionError::EmptyCorpus);
    }

    let mut symbols: Vec<String> = Vec::new();
    let mut intern: HashMap<String, u32> = HashMap::new();
    let mut id_of = |s: String, symbols: &mut Vec<String>| -> u32 {
        *intern.entry(s.clone()).or_insert_with(|| {
            symbols.push(s);
            (symbols.len() - 1) as u32
        })
    };

    let mut alphabet = BTreeSet::new();
    let mut sorted_words: Vec<(&str, usize)> = word_freq.into_iter().collect();
    sorted_words.sort_unstable();
    let mut words: Vec<(Vec<u32>, usize)> = Vec::with_capacity(sorted_words.len());
    for (w, freq) in sorted_words {
        let ids = w
            .chars()
            .map(|c| {
                alphabet.insert(c);
                id_of(c.to_string(), &mut symbols)
            })
            .collect();
        words.push((ids, freq));
    }

    let mut learned = Vec::with_capacity(merges);
    for _ in 0..merges {
        let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
        for (ids, freq) in &words {
            for pair in ids.windows(2) {
                *counts.entry((pair[0], pair[1])).or_default() += freq;
            }
        }
        let best = counts.into_iter().max_by(|(pa, ca), (pb, cb)| {
            ca.cmp(cb).then_with(|| {
                let ka = (&symbols[pa.0 as usize], &symbols[pa.1 as usize]);
                let kb = (&symbols[pb.0 as usize], &symbols[pb.1 as usize]);
                kb.cmp(&ka)
            })
        });
        let Some(((left, right), _)) = best else { break };
        let joined = format!("{}{}", symbols[left as usize], symbols[right as usize]);
        learned.push((symbols[left as usize].clone(), symbols[right as usize].clone()));
        let new_id = id_of(joined, &mut symbols);
        for (ids, _) in words.iter_mut() {
            if ids.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == left && ids[i + 1] == right {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            *ids = out;
        }
    }
    Ok(SubwordVocab::assemble(learned, alphabet))
}

/// One piece of segmented text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    /// A maximal whitespace run, kept verbatim.
    Space(String),
    Subword(Subword),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subword {
    pub text: String,
    /// Index of the whitespace-delimited word this subword belongs to.
    pub word: usize,
    pub begins_word: bool,
}

/// Text split into whitespace runs and subwords. Concatenating every
/// piece reproduces the input exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Segmentation {
    pub pieces: Vec<Piece>,
}

impl Segmentation {
    pub fn subwords(&self) -> impl Iterator<Item = &Subword> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Subword(s) => Some(s),
            Piece::Space(_) => None,
        })
    }

    pub fn subword_count(&self) -> usize {
        self.subwords().count()
    }

    pub fn to_text(&self) -> String {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Space(s) => s.as_str(),
                Piece::Subword(s) => s.text.as_str(),
            })
            .collect()
    }
}

pub fn segment(text: &str, vocab: &SubwordVocab) -> Segmentation {
    let mut pieces = Vec::new();
    let mut word = 0;
    let mut rest = text;
    while !rest.is_empty() {
        let split = rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace() != rest.starts_with(char::is_whitespace))
            .map_or(rest.len(), |(i, _)| i);
        let (run, tail) = rest.split_at(split);
        if run.starts_with(char::is_whitespace) {
            pieces.push(Piece::Space(run.to_string()));
        } else {
            for (i, sub) in vocab.segment_word(run).into_iter().enumerate() {
                pieces.push(Piece::Subword(Subword { text: sub, word, begins_word: i == 0 }));
            }
            word += 1;
        }
        rest = tail;
    }
    Segmentation { pieces }
}
