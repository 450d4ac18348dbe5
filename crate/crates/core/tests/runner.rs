mod common;

use std::path::Path;
use std::process::Command;

use cxr_icl::backend::HttpConfig;
use cxr_icl::prompting::Ablation;
use cxr_icl::runner::*;

fn config(rates: &[f64], ablations: &[Ablation], shots: &[usize]) -> ExperimentConfig {
    ExperimentConfig {
        seed: 17,
        data: DataSource::Synthetic { records: 300, train: 250, validation: 0, test: 50 },
        rates: rates.to_vec(),
        ablations: ablations.to_vec(),
        shots: shots.to_vec(),
        bpe_merges: 300,
        ..Default::default()
    }
}

#[test]
fn one_row_per_record_and_condition() {
    let report = run_experiment(&config(&[0.0], &[Ablation::Full], &[2])).unwrap();
    assert_eq!(report.rows.len(), 50);
    assert_eq!(report.conditions.len(), 1);
    assert_eq!(report.conditions[0].records, 50);
    // echo mock: the generation is the first retrieved shot's impression
    assert!(report.rows.iter().all(|r| !r.generation.is_empty() && r.shot_ids.len() == 2));
}

#[test]
fn rate_zero_matches_uncorrupted_run() {
    let alone = run_experiment(&config(&[0.0], &[Ablation::Full], &[2])).unwrap();
    let swept = run_experiment(&config(&[0.0, 0.3], &[Ablation::Full], &[2])).unwrap();
    let at_zero: Vec<_> = swept.rows.iter().filter(|r| r.rate == 0.0).cloned().collect();
    assert_eq!(alone.rows, at_zero);
}

#[test]
fn reports_are_byte_identical_and_recompute_from_rows() {
    let cfg = config(&[0.0, 0.1, 0.3, 0.5], &Ablation::ALL, &[2]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&run_experiment(&cfg).unwrap(), a.path()).unwrap();
    emit_report(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    for name in REPORT_FILES {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    let recomputed = ExperimentReport::from_rows(cfg, load_rows(a.path().join("rows.jsonl")).unwrap());
    assert_eq!(serde_json::to_value(&recomputed.conditions).unwrap(), summary["conditions"]);
    assert_eq!(recomputed.conditions.len(), 16);
}

#[test]
fn shot_sweep_produces_zero_one_and_two_shot_rows() {
    let report = run_experiment(&config(&[0.0, 0.5], &[Ablation::Full], &[0, 1, 2])).unwrap();
    let shots: Vec<usize> = report.conditions.iter().map(|c| c.shots).collect();
    assert_eq!(shots, [0, 1, 2, 0, 1, 2]);
    assert!(report.rows.iter().filter(|r| r.shots == 0).all(|r| r.generation.is_empty() && r.shot_ids.is_empty()));
    assert!(render_tables(&report).contains("by shot count"));
}

#[test]
fn generation_cache_makes_reruns_free() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&[0.0, 0.3], &[Ablation::Full, Ablation::NoText], &[2]);
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let first = run_experiment(&cfg).unwrap();
    let second = run_experiment(&cfg).unwrap();
    // identical prompts inside one run (e.g. a finding with nothing masked)
    // may already hit; a rerun must hit on everything
    assert!(first.stats.as_ref().unwrap().cache_hits < first.rows.len());
    let stats = second.stats.as_ref().unwrap();
    assert_eq!(stats.cache_hits, stats.requests);
    assert_eq!(first.rows, second.rows);
}

#[test]
fn backend_failures_carry_record_id_and_stage() {
    let mut cfg = config(&[0.0], &[Ablation::Full], &[1]);
    cfg.backend = BackendConfig::Http(HttpConfig {
        endpoint: "http://127.0.0.1:9/v1/completions".into(),
        max_attempts: 1,
        timeout_secs: 2.0,
        ..Default::default()
    });
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(&err, RunError::Stage { stage: "generation", id, .. } if id.starts_with("syn-")), "{err}");
    assert_eq!(err.exit_code(), 3);
}

fn cxr_icl(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cxr-icl")).args(args).current_dir(cwd).env("RUST_LOG", "error").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let (code, _) = cxr_icl(&["prepare", "--synthetic", "400", "--train-size", "150", "--test-size", "40", "--seed", "5"], d);
    assert_eq!(code, 0);
    assert!(d.join("data/gold_labels.jsonl").exists());

    let (code, out) = cxr_icl(&["corrupt", "--train", "data/train.jsonl", "--test", "data/test.jsonl", "--merges", "200"], d);
    assert_eq!(code, 0, "{out}");
    assert!(d.join("corrupted/test.corrupted-0.3.jsonl").exists());

    let (code, out) = cxr_icl(&["validate-corruption", "--test", "data/test.jsonl", "--dir", "corrupted"], d);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("StrictlyDecreasing"), "{out}");

    let (code, _) = cxr_icl(&["index", "--train", "data/train.jsonl", "--bm25-k1", "1.5", "--out", "bm25.index"], d);
    assert_eq!(code, 0);
    let index = cxr_icl::retrieval::Bm25Index::load(d.join("bm25.index")).unwrap();
    assert_eq!(index.params().k1, 1.5);

    let run = [
        "run", "--train", "data/train.jsonl", "--test", "data/test.jsonl", "--ablation", "all", "--shots", "2",
        "--description-mode", "threshold", "--out", "run",
    ];
    let (code, out) = cxr_icl(&run, d);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("w/o text and image"));
    let rows = load_rows(d.join("run/rows.jsonl")).unwrap();
    assert_eq!(rows.len(), 40 * 4 * 4);

    let before = std::fs::read(d.join("run/summary.csv")).unwrap();
    let (code, _) = cxr_icl(&["report", "--from", "run", "--out", "rerendered"], d);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(d.join("rerendered/summary.csv")).unwrap(), before);
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(cxr_icl(&["frobnicate"], d).0, 1);
    assert_eq!(cxr_icl(&["run", "--ablation", "sideways"], d).0, 1);
    assert_eq!(cxr_icl(&["run", "--rates", "1.5"], d).0, 1);
    assert_eq!(cxr_icl(&["index", "--train", "missing.jsonl"], d).0, 2);
    std::fs::write(d.join("http.toml"), "[backend]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:9/x\"\nmax_attempts = 1\n").unwrap();
    let (code, _) = cxr_icl(&["--config", "http.toml", "run", "--out", "r"], d);
    assert_eq!(code, 3);
    assert_eq!(cxr_icl(&["--help"], d).0, 0);
}
