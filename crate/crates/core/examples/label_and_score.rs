// Score generated impressions: ROUGE-L on tokens, F1 on extracted
// observation labels.

use cxr_icl::metrics::{f1_labels, label_text, rouge_l, LabelVector};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let pairs = [
        ("Mild cardiomegaly. No pleural effusion.", "Stable mild cardiomegaly without effusion."),
        ("No acute cardiopulmonary process.", "There is no evidence of pneumonia or CHF."),
        ("Right lower lobe pneumonia.", "Right basilar atelectasis, but pneumonia is not excluded."),
    ];
    let mut predicted: Vec<LabelVector> = Vec::new();
    let mut reference = Vec::new();
    for (generated, gold) in pairs {
        let r = rouge_l(generated, gold);
        let (p, g) = (label_text(generated), label_text(gold));
        println!("rouge-l f1 {:.4}  labels {p} vs {g}", r.f1);
        predicted.push(p);
        reference.push(g);
    }
    let report = f1_labels(&predicted, &reference)?;
    println!("micro P/R/F1 {:.4} {:.4} {:.4}", report.micro.precision, report.micro.recall, report.micro.f1);
    for (o, s) in report.per_observation.iter().filter(|(_, s)| s.support > 0) {
        println!("  {:<28} f1 {:.4} support {}", o.display_name(), s.f1, s.support);
    }
    Ok(report.micro.f1)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
