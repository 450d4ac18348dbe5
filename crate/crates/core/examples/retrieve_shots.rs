// Rank training findings against a query with BM25.

use cxr_icl::retrieval::{build_index, Bm25Params};

pub fn run_example() -> Result<Vec<String>, Box<dyn std::error::Error>> {
    let train = [
        ("a", "Small left pleural effusion. Heart size is normal."),
        ("b", "The heart is enlarged. No pleural effusion."),
        ("c", "Lungs are clear. No pneumothorax."),
        ("d", "Moderate cardiomegaly with mild pulmonary edema."),
    ];
    let index = build_index(&train, Bm25Params::default())?;
    let query = "enlarged heart, small effusion";

    let hits = index.retrieve_top_k(query, 3);
    for hit in &hits {
        println!("{:>2} {:<2} {:.4}", hit.ordinal, hit.id, hit.score);
    }
    Ok(hits.into_iter().map(|h| h.id).collect())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
