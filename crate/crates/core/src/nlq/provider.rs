use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("quota exceeded")]
    Quota,
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    InvalidResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl ProviderError {
    /// Whether another attempt may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout | ProviderError::Quota => true,
            ProviderError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub const DEFAULT_MAX_TOKENS: u32 = 256;

    /// Temperature 0, default output cap.
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Result<Self, ProviderError> {
        Self {
            system: system.into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ProviderError> {
        if self.user.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("user text is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(self)
    }
}

/// A chat-completion backend. Implementations must be callable from several
/// threads at once.
pub trait ModelProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
    fn identity(&self) -> String;
}

impl<P: ModelProvider + ?Sized> ModelProvider for Box<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<P: ModelProvider + ?Sized> ModelProvider for std::sync::Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
    fn identity(&self) -> String {
        (**self).identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_validation() {
        assert!(ChatRequest::new("", "hi").is_ok());
        assert!(ChatRequest::new("sys", "  ").is_err());
        let mut r = ChatRequest::new("", "hi").unwrap();
        r.temperature = 2.5;
        assert!(r.validated().is_err());
    }
}
