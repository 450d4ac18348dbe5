//! Okapi BM25 over training findings.
//!
//! Documents and queries are tokenized into lowercased alphanumeric terms
//! with no stemming or stopwords. The idf term is
//! `ln((N - df + 0.5) / (df + 0.5) + 1)`, which is never negative.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

const INDEX_HEADER: &str = "#bm25-index v1";

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("invalid BM25 parameters k1={k1}, b={b}: need k1 > 0 and 0 <= b <= 1")]
    InvalidParams { k1: f64, b: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("index file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, RetrievalError> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k1 > 0.0 && (0.0..=1.0).contains(&self.b) {
            Ok(())
        } else {
            Err(RetrievalError::InvalidParams { k1: self.k1, b: self.b })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    /// Term to postings, ascending by document ordinal.
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    params: Bm25Params,
}

/// A retrieved document.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub ordinal: usize,
    pub id: String,
    pub score: f64,
}

pub fn build_index<I, S>(docs: &[(I, S)], params: Bm25Params) -> Result<Bm25Index, RetrievalError>
where
    I: AsRef<str>,
    S: AsRef<str>,
{
    params.validate()?;
    if docs.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    let mut doc_ids = Vec::with_capacity(docs.len());
    for (ordinal, (id, text)) in docs.iter().enumerate() {
        let tokens = tokenize(text.as_ref());
        doc_lengths.push(tokens.len() as u32);
        doc_ids.push(id.as_ref().to_string());
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting { doc: ordinal as u32, tf: count });
        }
    }
    let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
    let avg_doc_length = total as f64 / doc_lengths.len() as f64;
    Ok(Bm25Index { postings, doc_lengths, avg_doc_length, doc_ids, params })
}

impl Bm25Index {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_id(&self, ordinal: usize) -> Option<&str> {
        self.doc_ids.get(ordinal).map(String::as_str)
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, ordinal: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let len_ratio = if self.avg_doc_length > 0.0 {
            f64::from(self.doc_lengths[ordinal]) / self.avg_doc_length
        } else {
            0.0
        };
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_ratio))
    }

    /// BM25 score of one document. Every query token contributes, so a
    /// repeated query term counts once per occurrence.
    ///
    /// # Panics
    /// If `ordinal` is out of range.
    pub fn score(&self, query: &str, ordinal: usize) -> f64 {
        assert!(ordinal < self.len(), "ordinal {ordinal} out of range for {} documents", self.len());
        let mut total = 0.0;
        for term in tokenize(query) {
            let postings = self.postings(&term);
            if let Ok(pos) = postings.binary_search_by_key(&(ordinal as u32), |p| p.doc) {
                total += self.term_weight(self.idf(postings.len()), postings[pos].tf, ordinal);
            }
        }
        total
    }

    /// Scores of every document, accumulated in query-token order.
    pub fn score_all(&self, query: &str) -> Vec<f64> {
        let mut scores = vec![0.0; self.len()];
        for term in tokenize(query) {
            let postings = self.postings(&term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(postings.len());
            for p in postings {
                scores[p.doc as usize] += self.term_weight(idf, p.tf, p.doc as usize);
            }
        }
        scores
    }

    /// The `k` best documents by descending score, ties broken by ascending
    /// ordinal. Zero-score documents fill the list when fewer documents
    /// match.
    pub fn retrieve_top_k(&self, query: &str, k: usize) -> Vec<Hit> {
        if k == 0 {
            return Vec::new();
        }
        let scores = self.score_all(query);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        order
            .into_iter()
            .map(|ordinal| Hit { ordinal, id: self.doc_ids[ordinal].clone(), score: scores[ordinal] })
            .collect()
    }

    /// Writes a versioned header line followed by the index as one JSON line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let path = path.as_ref();
        let io = |source| RetrievalError::Io { path: path.to_path_buf(), source };
        let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
        writeln!(file, "{INDEX_HEADER}").map_err(io)?;
        serde_json::to_writer(&mut file, self).map_err(|e| io(e.into()))?;
        writeln!(file).map_err(io)?;
        file.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RetrievalError::Io { path: path.to_path_buf(), source })?;
        let (header, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
        if header.trim_end() != INDEX_HEADER {
            return Err(RetrievalError::Format(format!("expected header {INDEX_HEADER:?}, found {header:?}")));
        }
        let index: Bm25Index = serde_json::from_str(body).map_err(|e| RetrievalError::Format(e.to_string()))?;
        index.params.validate()?;
        let n = index.doc_ids.len();
        if index.doc_lengths.len() != n || index.postings.values().flatten().any(|p| p.doc as usize >= n) {
            return Err(RetrievalError::Format("inconsistent document tables".into()));
        }
        Ok(index)
    }
}
