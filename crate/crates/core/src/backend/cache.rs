use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, BackendError, GenerationRequest, GenerationResponse};

const CACHE_FILE: &str = "generations.jsonl";

/// SHA-256 over the backend identity, prompt and decoding parameters.
pub fn cache_key(backend_name: &str, request: &GenerationRequest) -> String {
    let material = serde_json::json!({
        "backend": backend_name,
        "prompt": request.prompt,
        "max_new_tokens": request.params.max_new_tokens,
        "temperature": request.params.temperature,
        "stop": request.params.stop,
    });
    hex::encode(Sha256::digest(material.to_string().as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    text: String,
}

/// Append-only JSONL store of completions keyed by [`cache_key`].
pub struct GenerationCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    writer: Mutex<File>,
}

impl GenerationCache {
    /// Opens (or creates) the cache inside `dir`. Unparseable lines, such as
    /// a torn final write, are skipped.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                match serde_json::from_str::<Entry>(&line?) {
                    Ok(e) => {
                        entries.insert(e.key, e.text);
                    }
                    Err(e) => log::warn!("{}: skipping bad cache line: {e}", path.display()),
                }
            }
        }
        let mut writer = OpenOptions::new().create(true).append(true).open(&path)?;
        let bytes = fs::read(&path)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            writer.write_all(b"\n")?;
        }
        Ok(Self { path, entries: Mutex::new(entries), writer: Mutex::new(writer) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn put(&self, key: String, text: String) -> Result<(), BackendError> {
        let mut line = serde_json::to_string(&Entry { key: key.clone(), text: text.clone() })
            .map_err(|e| BackendError::Other(e.to_string()))?;
        line.push('\n');
        {
            let mut w = self.writer.lock().expect("cache writer lock");
            w.write_all(line.as_bytes())?;
            w.flush()?;
        }
        self.entries.lock().expect("cache lock").insert(key, text);
        Ok(())
    }
}

/// Serves repeated requests from a [`GenerationCache`].
pub struct CachedBackend<B> {
    inner: B,
    cache: GenerationCache,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<B: Backend> CachedBackend<B> {
    pub fn new(inner: B, cache: GenerationCache) -> Self {
        Self { inner, cache, hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &GenerationCache {
        &self.cache
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let name = self.inner.name();
        let key = cache_key(&name, request);
        let started = Instant::now();
        if let Some(text) = self.cache.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            log::debug!("cache hit for {} ({})", request.metadata, &key[..12]);
            return Ok(GenerationResponse { text, latency: started.elapsed(), backend_name: name, cached: true });
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let response = self.inner.generate(request)?;
        self.cache.put(key, response.text.clone())?;
        Ok(response)
    }
}
