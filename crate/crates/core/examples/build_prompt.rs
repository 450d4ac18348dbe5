// Retrieve two shots for a test finding and render the prompt under each
// input ablation.

use cxr_icl::corpus::{ClassifierOutput, ReportRecord};
use cxr_icl::description::DescriptionMode;
use cxr_icl::prompting::{build_prompt, select_shots, Ablation, PromptConfig, TestInput};
use cxr_icl::retrieval::{build_index, Bm25Params};

fn probs(hot: usize, p: f64) -> ClassifierOutput {
    let mut v = [0.05; 14];
    v[hot] = p;
    ClassifierOutput::new(v).expect("valid probabilities")
}

pub fn run_example() -> Result<Vec<String>, Box<dyn std::error::Error>> {
    let train = vec![
        ReportRecord::new("t1", "Moderate cardiomegaly. No focal consolidation.", "Cardiomegaly.")
            .with_probabilities(probs(1, 0.81)),
        ReportRecord::new("t2", "Small right pleural effusion with adjacent atelectasis.", "Small right effusion.")
            .with_probabilities(probs(9, 0.64)),
        ReportRecord::new("t3", "Lungs are clear. No acute process.", "No acute cardiopulmonary process.")
            .with_probabilities(probs(8, 0.9)),
    ];
    let test = ReportRecord::new("q", "Heart is enlarged. Small _ effusion.", "").with_probabilities(probs(9, 0.4));

    let docs: Vec<(&str, &str)> = train.iter().map(|r| (r.id.as_str(), r.finding.as_str())).collect();
    let index = build_index(&docs, Bm25Params::default())?;
    let mode = DescriptionMode::Probability;
    let selection = select_shots(&index, &test.finding, 2, &train, mode)?;
    let input = TestInput::from_record(&test, mode);

    let mut prompts = Vec::new();
    for ablation in Ablation::ALL {
        let prompt = build_prompt(&PromptConfig::default().with_ablation(ablation), &selection.examples, &input)?;
        println!("===== {ablation} (shots {:?})\n{}\n", prompt.shot_ids, prompt.text);
        prompts.push(prompt.text);
    }
    Ok(prompts)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
