// Full sweep on a synthetic corpus with the mock backend: four input
// ablations at four corruption rates, written as report files.

use cxr_icl::prompting::Ablation;
use cxr_icl::runner::{emit_report, render_tables, run_experiment, BackendConfig, ExperimentConfig, ExperimentReport};

pub fn run_example() -> Result<ExperimentReport, Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        seed: 3,
        ablations: Ablation::ALL.to_vec(),
        shots: vec![0, 1, 2],
        backend: BackendConfig::Mock { rule: "identity-finding".into() },
        output_dir: std::env::temp_dir().join("cxr-icl-ablation-sweep"),
        ..Default::default()
    };
    let report = run_experiment(&config)?;
    for path in emit_report(&report, &config.output_dir)? {
        println!("wrote {}", path.display());
    }
    print!("{}", render_tables(&report));
    Ok(report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
