// Shared oracles and fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use cxr_icl::corpus::{ClassifierOutput, Observation, ReportRecord};
use cxr_icl::description::DescriptionMode;
use cxr_icl::metrics::{LabelStatus, LabelVector};
use cxr_icl::prompting::{FewShotExample, PromptConfig, TestInput};
use cxr_icl::text::{tokenize, word_count};

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

// ---- ROUGE-L ----

/// Longest common subsequence by enumerating every subsequence of the
/// shorter sequence. Exponential; keep inputs to ~12 tokens.
pub fn brute_force_lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let is_subsequence = |sub: &[&T]| {
        let mut it = long.iter();
        sub.iter().all(|x| it.any(|y| y == *x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let n = mask.count_ones() as usize;
        if n <= best {
            continue;
        }
        let sub: Vec<&T> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if is_subsequence(&sub) {
            best = n;
        }
    }
    best
}

/// (precision, recall, f1) straight from the definitions.
pub fn rouge_from_lcs(lcs: usize, candidate_len: usize, reference_len: usize) -> (f64, f64, f64) {
    let p = if candidate_len == 0 { 0.0 } else { lcs as f64 / candidate_len as f64 };
    let r = if reference_len == 0 { 0.0 } else { lcs as f64 / reference_len as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

// ---- BM25 ----

/// Okapi BM25 for every document, computed term by term from raw token
/// lists with no index.
pub fn bm25_scores(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    docs.iter()
        .map(|doc| {
            let dl = doc.len() as f64;
            query
                .iter()
                .map(|q| {
                    let df = docs.iter().filter(|d| d.contains(q)).count() as f64;
                    let tf = doc.iter().filter(|t| *t == q).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                    let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm))
                })
                .sum()
        })
        .collect()
}

/// Ordinals by descending score, ties by ascending ordinal.
pub fn expected_ranking(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    order
}

// ---- length filter ----

/// Sort by word count, slice away a quarter of the ranks at each end, and
/// keep every record whose count falls within the surviving range.
pub fn quartile_oracle(records: &[ReportRecord]) -> Vec<ReportRecord> {
    let mut counts: Vec<usize> = records.iter().map(|r| word_count(&r.finding)).collect();
    counts.sort();
    let q = records.len() / 4;
    let middle = &counts[q..records.len() - q];
    let (lo, hi) = (middle[0], middle[middle.len() - 1]);
    records.iter().filter(|r| (lo..=hi).contains(&word_count(&r.finding))).cloned().collect()
}

// ---- labeler ----

fn observations(field: &str) -> Vec<Observation> {
    field.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse().expect("observation name")).collect()
}

/// `(sentence, expected labels)` from the hand-labeled fixture.
pub fn labeler_fixture() -> Vec<(String, LabelVector)> {
    let text = std::fs::read_to_string(format!("{FIXTURES}/labeler_sentences.tsv")).expect("fixture");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let mut cols = line.split('\t');
            let sentence = cols.next().unwrap().to_string();
            let mut labels = LabelVector::unmentioned();
            for o in observations(cols.next().unwrap_or("")) {
                labels.set(o, LabelStatus::Positive);
            }
            for o in observations(cols.next().unwrap_or("")) {
                labels.set(o, LabelStatus::Negative);
            }
            (sentence, labels)
        })
        .collect()
}

// ---- prompt ----

const SHOT_FINDING_A: &str = "The heart size is normal. The hilar and mediastinal contours are unremarkable. \
The lungs are well expanded and clear. There is no evidence of a pneumothorax or pleural effusion. \
The visualized osseous structures are unremarkable.";
const SHOT_FINDING_TEST: &str = "The heart size is normal. The hilar and mediastinal contours are unremarkable. \
The lungs are slightly hyperinflated, however appear to be clear. There is no evidence of pneumothorax or \
pleural effusions. The visualized osseous structures are unremarkable.";

fn output(values: [f64; 14]) -> ClassifierOutput {
    ClassifierOutput::new(values).expect("valid probabilities")
}

/// Config, two shots and test input that render the reference prompt.
pub fn reference_prompt_inputs() -> (PromptConfig, Vec<FewShotExample>, TestInput) {
    let mode = DescriptionMode::Probability;
    let describe = |v| Some(cxr_icl::description::describe(&output(v), mode));
    let shots = vec![
        FewShotExample {
            id: "shot-1".into(),
            image_description: describe([
                0.2420, 0.0182, 0.0399, 0.0080, 0.0894, 0.1079, 0.0747, 0.1830, 0.3168, 0.0373, 0.0105, 0.0488, 0.0648,
                0.1013,
            ]),
            finding: Some(SHOT_FINDING_A.into()),
            impression: "No acute cardiopulmonary processes. Specifically, no evidence of an infiltrative process \
suggestive of pneumonia."
                .into(),
        },
        FewShotExample {
            id: "shot-2".into(),
            image_description: describe([
                0.0238, 0.0039, 0.0076, 0.0010, 0.0332, 0.0794, 0.0150, 0.0421, 0.7847, 0.0062, 0.0093, 0.0078, 0.0196,
                0.0913,
            ]),
            finding: Some(SHOT_FINDING_A.into()),
            impression: "Normal chest x-ray. Specifically, no pulmonary evidence of TB.".into(),
        },
    ];
    let test = TestInput {
        image_description: describe([
            0.0465, 0.0089, 0.0128, 0.0021, 0.0443, 0.1487, 0.0414, 0.0580, 0.4593, 0.0302, 0.0344, 0.0132, 0.0253,
            0.0505,
        ]),
        finding: Some(SHOT_FINDING_TEST.into()),
    };
    (PromptConfig::default(), shots, test)
}

pub fn reference_prompt() -> String {
    std::fs::read_to_string(format!("{FIXTURES}/reference_prompt.txt")).expect("fixture")
}

// ---- HTTP stub ----

pub struct StubReply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl StubReply {
    pub fn ok(text: &str) -> Self {
        let body = serde_json::json!({ "choices": [{ "text": text }] }).to_string();
        Self { status: 200, body, delay: Duration::ZERO }
    }

    pub fn status(status: u16) -> Self {
        Self { status, body: "{\"error\":\"stub\"}".into(), delay: Duration::ZERO }
    }

    pub fn after(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// Minimal HTTP/1.1 server: one thread per connection, `Connection: close`
/// on every reply. The handler sees the 0-based request number and the
/// parsed JSON body.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub max_in_flight: Arc<AtomicUsize>,
}

type Handler = dyn Fn(usize, &serde_json::Value) -> StubReply + Send + Sync;

impl StubServer {
    pub fn start(handler: impl Fn(usize, &serde_json::Value) -> StubReply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let max_in_flight = Arc::new(AtomicUsize::new(0));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        let (req, max) = (requests.clone(), max_in_flight.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (req, max, in_flight, handler) = (req.clone(), max.clone(), in_flight.clone(), handler.clone());
                std::thread::spawn(move || {
                    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    max.fetch_max(now, Ordering::SeqCst);
                    let _ = serve(stream, &req, &*handler);
                    in_flight.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        Self { url, requests, max_in_flight }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn max_observed_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, counter: &AtomicUsize, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut headers = HashMap::new();
    let mut line = String::new();
    reader.read_line(&mut line)?;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let len: usize = headers.get("content-length").and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut body = vec![0; len];
    reader.read_exact(&mut body)?;
    let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
    let n = counter.fetch_add(1, Ordering::SeqCst);
    let reply = handler(n, &json);
    std::thread::sleep(reply.delay);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}

pub fn prompt_of(body: &serde_json::Value) -> String {
    body["prompt"].as_str().unwrap_or_default().to_string()
}

pub fn tokens(text: &str) -> Vec<String> {
    tokenize(text)
}
