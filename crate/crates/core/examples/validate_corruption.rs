// Label full and corrupted findings and check that agreement with the full
// labels falls as more of the text is masked.

use cxr_icl::corpus::generate_synthetic;
use cxr_icl::corruption::{corrupt_test_set, train_bpe};
use cxr_icl::runner::{validate_corruption, CorruptionTrend};

pub fn run_example() -> Result<CorruptionTrend, Box<dyn std::error::Error>> {
    let records = generate_synthetic(500, 21)?.records;
    let findings: Vec<&str> = records.iter().map(|r| r.finding.as_str()).collect();
    let vocab = train_bpe(&findings, 1000)?;
    let sets = corrupt_test_set(&records, &[0.0, 0.1, 0.3, 0.5], 21, &vocab)?;

    let trend = validate_corruption(&records, &sets)?;
    for p in &trend.points {
        println!("rate {:<4} label micro F1 {:.4}", p.rate, p.micro_f1());
    }
    println!("{:?}", trend.verdict);
    Ok(trend)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
