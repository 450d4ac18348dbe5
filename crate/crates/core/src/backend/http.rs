use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendError, GenerationRequest, GenerationResponse};

/// Request/response shape of the remote endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WireFormat {
    /// `{"prompt": ...}` in, `choices[0].text` out.
    #[default]
    Completion,
    /// The prompt becomes a single user message; `choices[0].message.content` out.
    Chat,
}

impl WireFormat {
    fn default_pointer(self) -> &'static str {
        match self {
            WireFormat::Completion => "/choices/0/text",
            WireFormat::Chat => "/choices/0/message/content",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Name of the environment variable holding a bearer token.
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: f64,
    pub max_attempts: usize,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub wire: WireFormat,
    /// JSON pointer to the generated text, overriding the wire default.
    pub response_pointer: Option<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/completions".into(),
            api_key_env: None,
            model: None,
            timeout_secs: 60.0,
            max_attempts: 3,
            backoff_ms: 500,
            wire: WireFormat::Completion,
            response_pointer: None,
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(BackendError),
    Fatal(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if config.max_attempts == 0 {
            return Err(BackendError::InvalidConfig("max_attempts must be at least 1".into()));
        }
        if config.timeout_secs.is_nan() || config.timeout_secs <= 0.0 {
            return Err(BackendError::InvalidConfig("timeout_secs must be positive".into()));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| BackendError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(Self { config, api_key, agent })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn body(&self, request: &GenerationRequest) -> Value {
        let mut body = match self.config.wire {
            WireFormat::Completion => json!({ "prompt": request.prompt }),
            WireFormat::Chat => json!({ "messages": [{ "role": "user", "content": request.prompt }] }),
        };
        body["max_tokens"] = json!(request.params.max_new_tokens);
        body["temperature"] = json!(request.params.temperature);
        if let Some(model) = &self.config.model {
            body["model"] = json!(model);
        }
        if let Some(stop) = &request.params.stop {
            body["stop"] = json!(stop);
        }
        body
    }

    fn attempt(&self, body: &Value, attempts: usize) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(Attempt::Retry(BackendError::Timeout { attempts })),
            Err(e) => {
                return Err(Attempt::Retry(BackendError::Network { attempts, message: e.to_string() }));
            }
        };
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => Attempt::Retry(BackendError::Timeout { attempts }),
            other => Attempt::Retry(BackendError::Network { attempts, message: other.to_string() }),
        })?;
        if !(200..300).contains(&status) {
            let err = BackendError::Status { status, body: text };
            return Err(if status == 429 || status >= 500 { Attempt::Retry(err) } else { Attempt::Fatal(err) });
        }
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(BackendError::MalformedResponse(e.to_string())))?;
        let pointer = self.config.response_pointer.as_deref().unwrap_or(self.config.wire.default_pointer());
        parsed
            .pointer(pointer)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal(BackendError::MalformedResponse(format!("no string at {pointer}"))))
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> String {
        format!(
            "http:{}:{}",
            self.config.endpoint,
            self.config.model.as_deref().unwrap_or("default")
        )
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        request.params.validate()?;
        let body = self.body(request);
        let started = Instant::now();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&body, attempt) {
                Ok(text) => {
                    return Ok(GenerationResponse {
                        text,
                        latency: started.elapsed(),
                        backend_name: self.name(),
                        cached: false,
                    })
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt == self.config.max_attempts => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("{}: attempt {attempt} failed ({e}); retrying in {delay:?}", request.metadata);
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("max_attempts >= 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_shapes() {
        let backend = HttpBackend::new(HttpConfig { model: Some("t5-xl".into()), ..Default::default() }).unwrap();
        let req = GenerationRequest::new("hello", "r1");
        let body = backend.body(&req);
        assert_eq!(body["prompt"], "hello");
        assert_eq!(body["max_tokens"], 128);
        assert_eq!(body["model"], "t5-xl");
        assert!(body.get("stop").is_none());

        let chat = HttpBackend::new(HttpConfig { wire: WireFormat::Chat, ..Default::default() }).unwrap();
        assert_eq!(chat.body(&req)["messages"][0]["content"], "hello");
    }

    #[test]
    fn missing_api_key_fails_fast() {
        let cfg = HttpConfig { api_key_env: Some("CXR_ICL_TEST_SURELY_UNSET_KEY".into()), ..Default::default() };
        assert!(matches!(HttpBackend::new(cfg), Err(BackendError::MissingApiKey(_))));
    }

    #[test]
    fn zero_attempts_rejected() {
        assert!(HttpBackend::new(HttpConfig { max_attempts: 0, ..Default::default() }).is_err());
    }
}
