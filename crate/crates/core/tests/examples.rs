// Every example must run and produce the output it advertises.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }
    };
}

example!(describe);
example!(retrieve_shots);
example!(build_prompt);
example!(corrupt_findings);
example!(label_and_score);
example!(backend_cache);
example!(validate_corruption);
example!(ablation_sweep);

#[test]
fn describe_renders_both_modes() {
    let out = describe::run_example().unwrap();
    assert!(out[0].contains("There is Atelectasis in the image in 24.20 probability."));
    assert!(out[1].contains("It seems there is no Cardiomegaly in the image."));
}

#[test]
fn retrieve_shots_prefers_overlapping_findings() {
    assert_eq!(retrieve_shots::run_example().unwrap(), ["b", "a", "c"]);
}

#[test]
fn build_prompt_covers_every_ablation() {
    let prompts = build_prompt::run_example().unwrap();
    assert_eq!(prompts.len(), 4);
    assert!(prompts.iter().all(|p| p.ends_with("Impression:")));
    assert!(prompts[0].contains("Image description:") && prompts[0].contains("Finding:"));
    assert!(!prompts[3].contains("Finding:") && !prompts[3].contains("Image description:"));
}

#[test]
fn corrupt_findings_tracks_rates() {
    for (rate, fraction) in corrupt_findings::run_example().unwrap() {
        assert!((rate - fraction).abs() < 0.03, "{rate} {fraction}");
    }
}

#[test]
fn label_and_score_reports_micro_f1() {
    let f1 = label_and_score::run_example().unwrap();
    assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn backend_cache_serves_second_pass() {
    assert_eq!(backend_cache::run_example().unwrap(), (2, 2));
}

#[test]
fn validate_corruption_decreases() {
    let trend = validate_corruption::run_example().unwrap();
    assert_eq!(trend.verdict, cxr_icl::runner::TrendVerdict::StrictlyDecreasing);
}

#[test]
fn ablation_sweep_fills_the_grid() {
    let report = ablation_sweep::run_example().unwrap();
    assert_eq!(report.conditions.len(), 4 * 4 * 3);
}
