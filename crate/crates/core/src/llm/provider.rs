use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ChatProvider, ChatRequest, LlmError, Message};
use crate::http::{
    is_retryable_status, HttpRequest, HttpTransport, InFlightLimiter, RetryPolicy, TokenBucket, UreqTransport,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpProviderConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// 0 disables the token bucket.
    pub requests_per_minute: u32,
    pub retry: RetryPolicy,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        HttpProviderConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            max_in_flight: 4,
            requests_per_minute: 0,
            retry: RetryPolicy::default(),
        }
    }
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpProvider {
    url: String,
    api_key: String,
    timeout: Duration,
    retry: RetryPolicy,
    transport: Arc<dyn HttpTransport>,
    limiter: InFlightLimiter,
    bucket: Option<TokenBucket>,
}

impl HttpProvider {
    pub fn new(config: &HttpProviderConfig) -> Result<Self, LlmError> {
        Self::with_transport(config, Arc::new(UreqTransport::default()))
    }

    pub fn with_transport(config: &HttpProviderConfig, transport: Arc<dyn HttpTransport>) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        if config.base_url.trim().is_empty() {
            return Err(LlmError::Config("base_url is empty".into()));
        }
        Ok(HttpProvider {
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key,
            timeout: Duration::from_secs(config.timeout_secs),
            retry: config.retry.clone(),
            transport,
            limiter: InFlightLimiter::new(config.max_in_flight),
            bucket: (config.requests_per_minute > 0).then(|| TokenBucket::per_minute(config.requests_per_minute)),
        })
    }
}

fn extract_content(body: &str) -> Result<String, LlmError> {
    let doc: Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(format!("body is not JSON: {e}")))?;
    doc.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.check()?;
        let http = HttpRequest {
            url: self.url.clone(),
            headers: vec![
                ("Authorization".into(), format!("Bearer {}", self.api_key)),
                ("Content-Type".into(), "application/json".into()),
            ],
            body: serde_json::to_string(request).expect("request serializes"),
            timeout: self.timeout,
        };
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            if let Some(bucket) = &self.bucket {
                bucket.take();
            }
            let outcome = {
                let _permit = self.limiter.acquire();
                self.transport.post(&http)
            };
            let (err, retry_after) = match outcome {
                Ok(resp) if resp.status == 200 => return extract_content(&resp.body),
                Ok(resp) if resp.status == 401 || resp.status == 403 => return Err(LlmError::Auth(resp.status)),
                Ok(resp) if is_retryable_status(resp.status) => (
                    LlmError::Status {
                        status: resp.status,
                        body: resp.body.chars().take(300).collect(),
                    },
                    resp.retry_after(),
                ),
                Ok(resp) => {
                    return Err(LlmError::Status {
                        status: resp.status,
                        body: resp.body.chars().take(300).collect(),
                    })
                }
                Err(e) => (LlmError::Transport(e.to_string()), None),
            };
            if attempt >= max_attempts {
                return Err(err);
            }
            log::warn!("chat request failed ({err}); retry {attempt}/{}", max_attempts - 1);
            std::thread::sleep(self.retry.delay(attempt, retry_after));
        }
    }
}

/// Hex sha256 over `role\0content\0` of every message.
pub fn fingerprint(messages: &[Message]) -> String {
    let mut h = Sha256::new();
    for m in messages {
        h.update(serde_json::to_string(&m.role).expect("role serializes").as_bytes());
        h.update([0]);
        h.update(m.content.as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

/// Which requests a script entry may answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Any,
    /// Some message content contains this substring.
    Contains(String),
    /// Exact [`fingerprint`] of the request messages.
    Fingerprint(String),
}

impl Matcher {
    fn matches(&self, request: &ChatRequest) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Contains(s) => request.messages.iter().any(|m| m.content.contains(s.as_str())),
            Matcher::Fingerprint(f) => *f == fingerprint(&request.messages),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match", default = "any")]
    pub matcher: Matcher,
    pub response: String,
}

fn any() -> Matcher {
    Matcher::Any
}

/// Replays canned responses. Each call consumes the first unused entry whose
/// matcher accepts the request; nothing is ever recycled.
pub struct ScriptedProvider {
    entries: Mutex<Vec<(ScriptEntry, bool)>>,
    calls: AtomicU64,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedProvider {
            entries: Mutex::new(entries.into_iter().map(|e| (e, false)).collect()),
            calls: AtomicU64::new(0),
        }
    }

    /// Plain queue: responses are returned in order regardless of prompt.
    pub fn queue<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new(
            responses
                .into_iter()
                .map(|r| ScriptEntry {
                    matcher: Matcher::Any,
                    response: r.into(),
                })
                .collect(),
        )
    }

    /// One JSON [`ScriptEntry`] per line; blank lines and `#` comments skipped.
    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: ScriptEntry =
                serde_json::from_str(line).map_err(|e| LlmError::Config(format!("script line {}: {e}", i + 1)))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.entries
            .lock()
            .expect("script lock")
            .iter()
            .filter(|(_, used)| !used)
            .count()
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.check()?;
        let call = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        let mut entries = self.entries.lock().expect("script lock");
        let slot = entries
            .iter_mut()
            .find(|(e, used)| !used && e.matcher.matches(request))
            .ok_or(LlmError::ScriptExhausted { call })?;
        slot.1 = true;
        Ok(slot.0.response.clone())
    }
}

impl ScriptEntry {
    pub fn to_jsonl(&self) -> String {
        json!({"match": self.matcher, "response": self.response}).to_string()
    }
}
