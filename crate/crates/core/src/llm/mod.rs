//! Chat-completion access, prompt templates and the JSON output contracts.

mod prompts;
mod provider;
mod response;

use serde::{Deserialize, Serialize};

pub use prompts::{
    fill, render_generator_prompt, render_validator_prompt, triples_json, ContractError, GENERATOR_TEMPLATE,
    VALIDATOR_TEMPLATE,
};
pub use provider::{fingerprint, HttpProvider, HttpProviderConfig, Matcher, ScriptEntry, ScriptedProvider};
pub use response::{
    parse_generation_response, parse_revision_response, strip_code_fence, FormatError, GenerationOutcome, QueryRevision,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    /// Single user turn at temperature 0.
    pub fn user(model: impl Into<String>, content: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            messages: vec![Message {
                role: Role::User,
                content: content.into(),
            }],
            temperature: 0.0,
            max_tokens: None,
        }
    }

    pub fn check(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("messages must be non-empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum LlmError {
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("provider rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected provider response: {0}")]
    Malformed(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
    #[error("scripted provider has no response left for call #{call}")]
    ScriptExhausted { call: u64 },
}

/// Anything that can turn a chat request into assistant text.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}
