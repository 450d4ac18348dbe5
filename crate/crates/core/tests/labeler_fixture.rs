mod common;

use cxr_icl::corpus::generate_synthetic;
use cxr_icl::metrics::label_text;

#[test]
fn hand_labeled_sentences_match() {
    let fixture = common::labeler_fixture();
    assert_eq!(fixture.len(), 30);
    let misses: Vec<String> = fixture
        .iter()
        .filter(|(s, want)| label_text(s) != *want)
        .map(|(s, want)| format!("{s:?}: got {} want {want}", label_text(s)))
        .collect();
    assert!(misses.is_empty(), "{misses:#?}");
}

#[test]
fn planted_labels_are_recovered() {
    let corpus = generate_synthetic(1000, 77).unwrap();
    let agree = corpus.records.iter().zip(&corpus.gold).filter(|(r, g)| label_text(&r.finding) == **g).count();
    assert!(agree as f64 / 1000.0 >= 0.95, "{agree}");
}
