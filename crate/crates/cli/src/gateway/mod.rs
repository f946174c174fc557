//! Provider abstraction for structured-output chat calls and embeddings.

pub mod batch;
pub mod cache;
pub mod mock;
pub mod remote;
pub mod schema;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use batch::{BatchOutcome, BatchPolicy, BatchReport, Failure, FailureClass, Gateway, StructuredResponse};
pub use schema::{Field, FieldType, Schema, ValidationError};

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredRequest {
    pub request_id: String,
    /// Empty when the prompt has no system part.
    pub system_prompt: String,
    pub user_prompt: String,
    pub schema: Schema,
}

impl StructuredRequest {
    pub fn new(request_id: impl Into<String>, system: &str, user: String, schema: Schema) -> Self {
        StructuredRequest {
            request_id: request_id.into(),
            system_prompt: system.to_string(),
            user_prompt: user,
            schema,
        }
    }

    /// sha256 over the system prompt, user prompt and schema. The request id
    /// is deliberately excluded so identical prompts share a cache entry.
    pub fn fingerprint(&self) -> String {
        let schema = self.schema.to_json_schema().to_string();
        let mut h = Sha256::new();
        for part in [self.system_prompt.as_str(), self.user_prompt.as_str(), schema.as_str()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, o: Usage) {
        self.input_tokens += o.input_tokens;
        self.output_tokens += o.output_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub raw: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    /// Worth retrying: network failure, rate limiting, server error.
    #[error("transport: {0}")]
    Transport(String),
    /// The provider refused the request; retrying will not help.
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("no fixture for fingerprint {0}")]
    FixtureMiss(String),
    #[error("embedding input {0} is empty")]
    EmptyInput(usize),
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

pub trait Provider: Send + Sync {
    fn model_id(&self) -> String;
    fn complete(&self, request: &StructuredRequest) -> Result<Completion, ProviderError>;
    /// One vector per input text, all of the same dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

/// Rough token count used when a provider reports none.
pub fn approx_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn model_id(&self) -> String {
        (**self).model_id()
    }

    fn complete(&self, request: &StructuredRequest) -> Result<Completion, ProviderError> {
        (**self).complete(request)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_ignores_request_id() {
        let s = Schema::new("S", "", vec![Field::new("x", FieldType::String)]);
        let a = StructuredRequest::new("a", "sys", "user".into(), s.clone());
        let b = StructuredRequest::new("b", "sys", "user".into(), s.clone());
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = StructuredRequest::new("a", "sy", "suser".into(), s);
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
