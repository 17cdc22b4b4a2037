//! OpenAI-compatible chat-completions backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendReply, ProviderRequest, Usage};
use crate::error::ProviderError;

pub const API_KEY_ENV: &str = "SPECTRACE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpBackend {
    /// Reads the API key from `SPECTRACE_API_KEY`.
    pub fn from_env(config: HttpConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(config, key)
    }

    pub fn new(config: HttpConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            api_key,
            agent,
        }
    }

    fn body(&self, request: &ProviderRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }
}

/// Maps an HTTP status onto the retry classes: 5xx/429 are transient,
/// 401/403 are auth failures, anything else is a rejected request.
fn classify_status(status: u16, body: &str) -> ProviderError {
    let snippet: String = body.chars().take(200).collect();
    match status {
        401 | 403 => ProviderError::Auth(format!("http {status}: {snippet}")),
        429 | 500..=599 => ProviderError::Failure(format!("http {status}: {snippet}")),
        _ => ProviderError::InvalidRequest(format!("http {status}: {snippet}")),
    }
}

pub fn parse_chat_response(body: &str) -> Result<BackendReply, ProviderError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| ProviderError::Unparseable(format!("response is not JSON: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::Unparseable("missing choices[0].message.content".into()))?
        .to_string();
    let usage = v.get("usage").and_then(|u| {
        Some(Usage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
            estimated: false,
        })
    });
    Ok(BackendReply { text, usage })
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ProviderRequest) -> Result<BackendReply, ProviderError> {
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(self.body(request).to_string())
            .map_err(|e| ProviderError::Failure(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Failure(format!("reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        parse_chat_response(&text).map_err(|e| match e {
            // a malformed envelope from the server is treated as transient
            ProviderError::Unparseable(m) => ProviderError::Failure(m),
            other => other,
        })
    }
}
