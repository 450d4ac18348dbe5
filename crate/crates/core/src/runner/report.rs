use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{Condition, ConditionSummary, ExperimentReport, RecordRow};
use super::RunError;
use crate::corpus::Observation;
use crate::prompting::Ablation;

/// Deterministic outputs of [`emit_report`]; `timing.json` is written
/// alongside but is not part of this set.
pub const REPORT_FILES: [&str; 4] = ["rows.jsonl", "summary.json", "summary.csv", "tables.txt"];
const TIMING_FILE: &str = "timing.json";

type Metric = (&'static str, fn(&ConditionSummary) -> f64);

/// Per-disease columns, in table order.
const DISEASES: [Observation; 5] = [
    Observation::Cardiomegaly,
    Observation::Edema,
    Observation::Consolidation,
    Observation::Atelectasis,
    Observation::PleuralEffusion,
];

#[derive(Serialize, Deserialize)]
struct Summary {
    config: ExperimentConfig,
    conditions: Vec<ConditionSummary>,
}

fn rate_label(rate: f64) -> String {
    if rate == 0.0 {
        "Full".to_string()
    } else {
        format!("Corrupted {rate}")
    }
}

fn abbreviation(o: Observation) -> &'static str {
    o.abbreviation().expect("table diseases have abbreviations")
}

/// One row per (rate, condition). Numbers use shortest round-trip
/// formatting so the file carries full precision.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = vec![
        "rate", "ablation", "shots", "records", "rouge_p", "rouge_r", "rouge_f1", "label_micro_p", "label_micro_r",
        "label_micro_f1",
    ];
    header.extend(DISEASES.iter().map(|&o| abbreviation(o)));
    w.write_record(&header).expect("in-memory csv");
    for c in &report.conditions {
        let mut row = vec![
            c.rate.to_string(),
            c.ablation.name().to_string(),
            c.shots.to_string(),
            c.records.to_string(),
            c.rouge.precision.to_string(),
            c.rouge.recall.to_string(),
            c.rouge.f1.to_string(),
            c.labels.micro.precision.to_string(),
            c.labels.micro.recall.to_string(),
            c.labels.micro.f1.to_string(),
        ];
        row.extend(DISEASES.iter().map(|&o| c.labels.observation(o).f1.to_string()));
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn aligned(out: &mut String, title: &str, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        padded.join(" | ").trim_end().to_string()
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 3 * (widths.len() - 1));
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", line(header));
    let _ = writeln!(out, "{rule}");
    for row in rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out.push('\n');
}

fn distinct<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut seen = Vec::new();
    for item in items {
        if !seen.contains(&item) {
            seen.push(item);
        }
    }
    seen
}

/// Aligned-text tables: a condition × rate grid per metric and shot count,
/// a per-disease table per condition, and a shot × rate grid when more than
/// one shot count was run.
pub fn render_tables(report: &ExperimentReport) -> String {
    let rates = distinct(report.conditions.iter().map(|c| c.rate));
    let ablations = distinct(report.conditions.iter().map(|c| c.ablation));
    let shots = distinct(report.conditions.iter().map(|c| c.shots));
    let get = |rate: f64, ablation: Ablation, shots: usize| report.summary(rate, Condition { ablation, shots });
    let cell = |s: Option<&ConditionSummary>, f: fn(&ConditionSummary) -> f64| {
        s.map(|s| format!("{:.4}", f(s))).unwrap_or_else(|| "-".into())
    };
    let metrics: [Metric; 2] =
        [("ROUGE-L F1", |s| s.rouge.f1), ("Label micro F1", |s| s.labels.micro.f1)];

    let mut header = vec!["Method".to_string()];
    header.extend(rates.iter().map(|&r| rate_label(r)));
    let mut out = String::new();
    for &k in &shots {
        for (name, f) in metrics {
            let rows: Vec<Vec<String>> = ablations
                .iter()
                .map(|&a| {
                    let mut row = vec![a.table_label().to_string()];
                    row.extend(rates.iter().map(|&r| cell(get(r, a, k), f)));
                    row
                })
                .collect();
            aligned(&mut out, &format!("{name}, {k}-shot"), &header, &rows);
        }
    }

    if shots.len() > 1 {
        let mut header = vec!["Shots".to_string()];
        header.extend(rates.iter().map(|&r| rate_label(r)));
        for &a in &ablations {
            for (name, f) in metrics {
                let rows: Vec<Vec<String>> = shots
                    .iter()
                    .map(|&k| {
                        let mut row = vec![format!("{k}-shot")];
                        row.extend(rates.iter().map(|&r| cell(get(r, a, k), f)));
                        row
                    })
                    .collect();
                aligned(&mut out, &format!("{name} by shot count, {}", a.table_label()), &header, &rows);
            }
        }
    }

    let mut header = vec![String::new()];
    header.extend(DISEASES.iter().map(|&o| abbreviation(o).to_string()));
    header.push("Micro Avg".into());
    for &k in &shots {
        for &a in &ablations {
            let mut rows: Vec<Vec<String>> = Vec::new();
            let mut support = None;
            for &r in &rates {
                let Some(s) = get(r, a, k) else { continue };
                let mut row = vec![rate_label(r)];
                row.extend(DISEASES.iter().map(|&o| format!("{:.4}", s.labels.observation(o).f1)));
                row.push(format!("{:.4}", s.labels.micro.f1));
                rows.push(row);
                support.get_or_insert_with(|| {
                    let mut row = vec!["Support".to_string()];
                    row.extend(DISEASES.iter().map(|&o| s.labels.observation(o).support.to_string()));
                    row.push(s.labels.per_observation.values().map(|o| o.support).sum::<usize>().to_string());
                    row
                });
            }
            rows.extend(support);
            aligned(&mut out, &format!("Disease label F1, {}, {k}-shot", a.table_label()), &header, &rows);
        }
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let mut f = fs::File::create(path).map_err(RunError::io(path))?;
    f.write_all(bytes).map_err(RunError::io(path))
}

fn rows_jsonl(rows: &[RecordRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Writes every file in [`REPORT_FILES`] to `dir`, plus `timing.json`
/// when the report carries wall-clock stats. Returns the paths written.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, RunError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(RunError::io(dir))?;
    let summary = Summary { config: report.config.clone(), conditions: report.conditions.clone() };
    let mut summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_json.push('\n');
    let contents = [
        rows_jsonl(&report.rows),
        summary_json,
        summary_csv(report),
        render_tables(report),
    ];
    let mut written = Vec::new();
    for (name, body) in REPORT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        written.push(path);
    }
    if let Some(stats) = &report.stats {
        let path = dir.join(TIMING_FILE);
        write_file(&path, serde_json::to_string_pretty(stats).expect("stats serialize").as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<RecordRow>, RunError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(RunError::io(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(RunError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| RunError::Report {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(rows)
}

/// Rebuilds a report from a run directory, recomputing every aggregate
/// from `rows.jsonl`. The config snapshot comes from `summary.json`.
pub fn load_report(dir: impl AsRef<Path>) -> Result<ExperimentReport, RunError> {
    let dir = dir.as_ref();
    let summary_path = dir.join("summary.json");
    let text = fs::read_to_string(&summary_path).map_err(RunError::io(&summary_path))?;
    let summary: Summary = serde_json::from_str(&text)
        .map_err(|e| RunError::Report { path: summary_path.clone(), message: e.to_string() })?;
    let rows = load_rows(dir.join("rows.jsonl"))?;
    Ok(ExperimentReport::from_rows(summary.config, rows))
}
