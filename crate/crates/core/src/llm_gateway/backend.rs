use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::fixtures::{ChatRequest, FixtureEntry, FixtureStore};
use super::BackendError;

/// A chat-completion service. Implementations return the raw response body
/// in the OpenAI chat-completions shape; [`response_text`] extracts the
/// message.
pub trait ChatBackend: Send + Sync {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError>;

    fn name(&self) -> String;
}

/// Text of the first choice's message.
pub fn response_text(body: &str) -> Result<String, BackendError> {
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse {
        message: e.to_string(),
        body: excerpt(body),
    })?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::MalformedResponse {
            message: "no choices[0].message.content".into(),
            body: excerpt(body),
        })
}

/// A minimal response body carrying `text`, as a chat-completions server
/// would return it.
pub fn completion_body(model: &str, text: &str) -> String {
    json!({
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop"
        }]
    })
    .to_string()
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            attempts: 1,
            base_delay_ms: 0,
        }
    }
}

/// Calls `backend` up to `policy.attempts` times while failures are
/// retryable transport errors.
pub fn complete_with_retry(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    policy: RetryPolicy,
) -> Result<String, BackendError> {
    let attempts = policy.attempts.max(1);
    let mut delay = Duration::from_millis(policy.base_delay_ms);
    let mut attempt = 1;
    loop {
        match backend.complete_raw(request) {
            Ok(body) => return Ok(body),
            Err(e) if e.is_retryable() && attempt < attempts => {
                log::warn!("{}: attempt {attempt}/{attempts} failed: {e}; retrying", backend.name());
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

/// Connection settings. Holds the *name* of the credential variable, never
/// the credential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model_name: String,
    /// Extra request fields such as `temperature`. Empty means the
    /// service defaults.
    pub controls: BTreeMap<String, serde_json::Value>,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: DEFAULT_ENDPOINT.into(),
            model_name: DEFAULT_MODEL.into(),
            controls: BTreeMap::new(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60,
            retry: RetryPolicy::default(),
        }
    }
}

struct Secret(String);

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

/// OpenAI-compatible chat-completions client.
#[derive(Debug)]
pub struct HttpBackend {
    endpoint: String,
    api_key: Secret,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::Credentials(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Transport {
                message: e.to_string(),
                retryable: false,
            })?;
        Ok(HttpBackend {
            endpoint: config.endpoint.clone(),
            api_key: Secret(api_key),
            client,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut payload = serde_json::Map::new();
        payload.insert("model".into(), json!(request.model));
        payload.insert("messages".into(), json!(request.messages));
        for (k, v) in &request.controls {
            payload.insert(k.clone(), v.clone());
        }
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key.0)
            .json(&payload)
            .send()
            .map_err(|e| BackendError::Transport {
                message: e.without_url().to_string(),
                retryable: true,
            })?;
        let status = response.status();
        let body = response.text().map_err(|e| BackendError::Transport {
            message: e.without_url().to_string(),
            retryable: true,
        })?;
        if !status.is_success() {
            return Err(BackendError::Status {
                code: status.as_u16(),
                body: excerpt(&body),
            });
        }
        Ok(body)
    }

    fn name(&self) -> String {
        format!("http({})", self.endpoint)
    }
}

/// Serves recorded responses only. Unknown requests are errors.
#[derive(Debug)]
pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        ReplayBackend { store }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl ChatBackend for ReplayBackend {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = request.key();
        match self.store.get(&key)? {
            Some(FixtureEntry::Response(body)) => Ok(body),
            Some(FixtureEntry::Miss(message)) => Err(BackendError::Transport {
                message: format!("recorded failure: {message}"),
                retryable: false,
            }),
            None => Err(BackendError::ReplayMiss { key }),
        }
    }

    fn name(&self) -> String {
        format!("replay({})", self.store.dir().display())
    }
}

/// Forwards to a live backend and stores every outcome. Requests already
/// in the store are answered from it.
pub struct RecordingBackend<B> {
    live: B,
    store: FixtureStore,
    retry: RetryPolicy,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(live: B, store: FixtureStore, retry: RetryPolicy) -> Self {
        RecordingBackend { live, store, retry }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = request.key();
        if let Some(FixtureEntry::Response(body)) = self.store.get(&key)? {
            return Ok(body);
        }
        match complete_with_retry(&self.live, request, self.retry) {
            Ok(body) => {
                self.store.put_response(&key, &body)?;
                Ok(body)
            }
            Err(e) if e.is_transport() => {
                self.store.put_miss(&key, &e.to_string())?;
                Err(BackendError::Transport {
                    message: e.to_string(),
                    retryable: false,
                })
            }
            Err(e) => Err(e),
        }
    }

    fn name(&self) -> String {
        format!("record({})", self.live.name())
    }
}

/// Backend answering with a function of the request; for tests and
/// offline fixture generation.
pub struct FnBackend<F> {
    label: String,
    respond: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    /// `respond` returns the assistant text; it is wrapped in a response body.
    pub fn new(label: impl Into<String>, respond: F) -> Self {
        FnBackend {
            label: label.into(),
            respond,
        }
    }
}

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (self.respond)(request).map(|text| completion_body(&request.model, &text))
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete_raw(request)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete_raw(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete_raw(request)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}
