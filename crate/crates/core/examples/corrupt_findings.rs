// Learn subwords from training findings, then mask a test set at several
// rates. Masks are nested: a subword hidden at 0.1 is also hidden at 0.3.

use cxr_icl::corpus::generate_synthetic;
use cxr_icl::corruption::{corrupt_test_set, train_bpe};

pub fn run_example() -> Result<Vec<(f64, f64)>, Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(300, 11)?;
    let (train, test) = corpus.records.split_at(250);
    let findings: Vec<&str> = train.iter().map(|r| r.finding.as_str()).collect();
    let vocab = train_bpe(&findings, 500)?;

    let sets = corrupt_test_set(test, &[0.0, 0.1, 0.3, 0.5], 7, &vocab)?;
    println!("original: {}", test[0].finding);
    for set in &sets {
        println!("\nrate {} ({:.3} of {} subwords masked)", set.rate, set.masked_fraction(), set.total_count);
        println!("{}", set.records[0].finding);
    }
    Ok(sets.iter().map(|s| (s.rate, s.masked_fraction())).collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
