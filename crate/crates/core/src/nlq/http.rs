//! Chat-completions HTTP client.

use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::provider::{ChatRequest, ModelProvider, ProviderError};

pub const ENV_ENDPOINT: &str = "MUSEKG_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "MUSEKG_LLM_API_KEY";
pub const ENV_MODEL: &str = "MUSEKG_LLM_MODEL";

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const DEFAULT_RETRIES: u32 = 2;
const DEFAULT_BACKOFF: Duration = Duration::from_millis(500);

/// Talks to an OpenAI-style `/chat/completions` endpoint. `endpoint` is the
/// full URL of that route.
#[derive(Debug)]
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    max_retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

pub fn http_provider(
    endpoint: impl Into<String>,
    api_key: Option<String>,
    model: impl Into<String>,
) -> Result<HttpProvider, ProviderError> {
    HttpProvider::new(endpoint, api_key, model, DEFAULT_TIMEOUT)
}

impl HttpProvider {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key: api_key.filter(|k| !k.is_empty()),
            model: model.into(),
            max_retries: DEFAULT_RETRIES,
            backoff: DEFAULT_BACKOFF,
            client,
        })
    }

    /// Reads the endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| ProviderError::InvalidRequest(format!("{ENV_ENDPOINT} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into());
        http_provider(endpoint, std::env::var(ENV_API_KEY).ok(), model)
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn body(&self, request: &ChatRequest) -> serde_json::Value {
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({ "role": "system", "content": request.system }));
        }
        messages.push(json!({ "role": "user", "content": request.user }));
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, ProviderError> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::Auth(status)),
            429 => return Err(ProviderError::Quota),
            _ => {
                let body = resp.text().unwrap_or_default();
                return Err(ProviderError::Http { status, body });
            }
        }
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| ProviderError::InvalidResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::InvalidResponse("no choices in response".into()))
    }
}

impl ModelProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let request = request.clone().validated()?;
        let body = self.body(&request);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transient() && attempt < self.max_retries => {
                    log::warn!("provider attempt {} failed: {e}; retrying", attempt + 1);
                    thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn identity(&self) -> String {
        format!("http:{}@{}", self.model, self.endpoint)
    }
}
