use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::{Backend, BackendError, GenerationRequest, GenerationResponse};
use crate::prompting::parse_prompt;

/// Deterministic completion rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockRule {
    /// `fixed:<text>` returns the text for every prompt.
    Fixed(String),
    /// Returns the impression of the first shot, or "" for zero-shot prompts.
    EchoFirstShotImpression,
    /// Returns the test block's finding, or "" when the finding is ablated.
    IdentityFinding,
}

impl fmt::Display for MockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockRule::Fixed(s) => write!(f, "fixed:{s}"),
            MockRule::EchoFirstShotImpression => f.write_str("echo-first-shot-impression"),
            MockRule::IdentityFinding => f.write_str("identity-finding"),
        }
    }
}

impl FromStr for MockRule {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "echo-first-shot-impression" => Ok(MockRule::EchoFirstShotImpression),
            "identity-finding" => Ok(MockRule::IdentityFinding),
            _ => s
                .strip_prefix("fixed:")
                .map(|t| MockRule::Fixed(t.to_string()))
                .ok_or_else(|| BackendError::InvalidConfig(format!("unknown mock rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    rule: MockRule,
}

impl MockBackend {
    pub fn new(rule: MockRule) -> Self {
        Self { rule }
    }

    pub fn complete(&self, prompt: &str) -> String {
        match &self.rule {
            MockRule::Fixed(s) => s.clone(),
            MockRule::EchoFirstShotImpression => parse_prompt(prompt)
                .shots
                .first()
                .and_then(|b| b.impression)
                .unwrap_or_default()
                .to_string(),
            MockRule::IdentityFinding => parse_prompt(prompt).test.finding.unwrap_or_default().to_string(),
        }
    }
}

impl Backend for MockBackend {
    fn name(&self) -> String {
        format!("mock:{}", self.rule)
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        request.params.validate()?;
        let started = Instant::now();
        let text = self.complete(&request.prompt);
        Ok(GenerationResponse { text, latency: started.elapsed(), backend_name: self.name(), cached: false })
    }
}
