// Batch generation with bounded concurrency and an on-disk cache. A second
// pass over the same prompts is served without calling the backend.

use cxr_icl::backend::{generate_batch, CachedBackend, GenerationCache, GenerationRequest, MockBackend, MockRule};

pub fn run_example() -> Result<(usize, usize), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("cxr-icl-cache-example-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let prompts = [
        "Summarize.\n\nFinding: Heart is enlarged.\nImpression:",
        "Summarize.\n\nFinding: Lungs are clear.\nImpression:",
    ];
    let requests: Vec<GenerationRequest> =
        prompts.iter().enumerate().map(|(i, p)| GenerationRequest::new(*p, format!("r{i}"))).collect();

    let backend = CachedBackend::new(MockBackend::new(MockRule::IdentityFinding), GenerationCache::open(&dir)?);
    for pass in 1..=2 {
        for result in generate_batch(&backend, &requests, 2)? {
            let r = result?;
            println!("pass {pass}: {:?} cached={}", r.text, r.cached);
        }
    }
    let counts = (backend.hits(), backend.misses());
    println!("hits {} misses {}", counts.0, counts.1);
    std::fs::remove_dir_all(&dir)?;
    Ok(counts)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(drop)
}
