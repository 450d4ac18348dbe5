// Turn classifier probabilities into the text that stands in for the image.

use cxr_icl::corpus::{ClassifierOutput, Observation};
use cxr_icl::description::{describe, DescriptionMode};

pub fn run_example() -> Result<Vec<String>, Box<dyn std::error::Error>> {
    let mut p = [0.01; 14];
    p[Observation::Atelectasis.index()] = 0.2420;
    p[Observation::PleuralEffusion.index()] = 0.71;
    p[Observation::Cardiomegaly.index()] = 0.2; // exactly at the cut: not positive
    let output = ClassifierOutput::new(p)?;

    let mut out = Vec::new();
    for mode in [DescriptionMode::Probability, DescriptionMode::default_threshold()] {
        let text = describe(&output, mode);
        println!("[{}]\n{text}\n", mode.name());
        out.push(text);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
