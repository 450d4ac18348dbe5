use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::corpus::{load_corpus, save_corpus};
use crate::corruption::{corrupted_file_name, CorruptedSet};

pub const CORRUPTION_MANIFEST: &str = "corruption.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub rate: f64,
    pub file: String,
    pub masked_count: usize,
    pub total_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionManifest {
    pub seed: u64,
    pub merges: usize,
    pub sets: Vec<ManifestEntry>,
}

/// Writes one corpus file per set plus `corruption.json` with the mask
/// counts.
pub fn write_corrupted_sets(
    dir: impl AsRef<Path>,
    sets: &[CorruptedSet],
    seed: u64,
    merges: usize,
) -> Result<Vec<PathBuf>, RunError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(RunError::io(dir))?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for set in sets {
        let file = corrupted_file_name(set.rate);
        let path = dir.join(&file);
        save_corpus(&path, &set.records)?;
        written.push(path);
        entries.push(ManifestEntry { rate: set.rate, file, masked_count: set.masked_count, total_count: set.total_count });
    }
    let manifest = CorruptionManifest { seed, merges, sets: entries };
    let path = dir.join(CORRUPTION_MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(RunError::io(&path))?;
    written.push(path);
    Ok(written)
}

/// Reads back the sets listed in `dir/corruption.json`.
pub fn load_corrupted_sets(dir: impl AsRef<Path>) -> Result<Vec<CorruptedSet>, RunError> {
    let dir = dir.as_ref();
    let path = dir.join(CORRUPTION_MANIFEST);
    let text = fs::read_to_string(&path).map_err(RunError::io(&path))?;
    let manifest: CorruptionManifest =
        serde_json::from_str(&text).map_err(|e| RunError::Report { path: path.clone(), message: e.to_string() })?;
    manifest
        .sets
        .into_iter()
        .map(|e| {
            Ok(CorruptedSet {
                rate: e.rate,
                records: load_corpus(dir.join(&e.file))?,
                masked_count: e.masked_count,
                total_count: e.total_count,
            })
        })
        .collect()
}
