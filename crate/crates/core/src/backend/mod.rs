//! Text generation backends: a deterministic mock, an HTTP completion
//! client, an on-disk response cache and a bounded-concurrency batch driver.

mod cache;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CachedBackend, GenerationCache};
pub use http::{HttpBackend, HttpConfig, WireFormat};
pub use mock::{MockBackend, MockRule};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("request failed after {attempts} attempts: {message}")]
    Network { attempts: usize, message: String },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: usize },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("generation cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// Decoding parameters shared by every request of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub max_new_tokens: usize,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self { max_new_tokens: 128, temperature: 0.0, stop: None }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_new_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_new_tokens must be at least 1".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendError::InvalidRequest(format!("temperature {} is negative", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    #[serde(flatten)]
    pub params: DecodingParams,
    /// Record id, for logging and error context.
    pub metadata: String,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, metadata: impl Into<String>) -> Self {
        Self { prompt: prompt.into(), params: DecodingParams::default(), metadata: metadata.into() }
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResponse {
    pub text: String,
    pub latency: Duration,
    pub backend_name: String,
    pub cached: bool,
}

pub trait Backend: Send + Sync {
    /// Stable identifier, also part of cache keys.
    fn name(&self) -> String;

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        (**self).generate(request)
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn name(&self) -> String {
        (**self).name()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        (**self).generate(request)
    }
}

/// Runs `requests` with at most `max_in_flight` outstanding at once.
/// Output position `i` is the result for request `i`; failures stay
/// per item.
pub fn generate_batch<B: Backend + ?Sized>(
    backend: &B,
    requests: &[GenerationRequest],
    max_in_flight: usize,
) -> Result<Vec<Result<GenerationResponse, BackendError>>, BackendError> {
    if max_in_flight == 0 {
        return Err(BackendError::InvalidConfig("max_in_flight must be at least 1".into()));
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<GenerationResponse, BackendError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();
    let workers = max_in_flight.min(requests.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(request) = requests.get(i) else { break };
                let result = backend.generate(request);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot is filled"))
        .collect())
}
