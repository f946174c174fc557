//! HTTP provider speaking the OpenAI-compatible chat and embeddings API.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{approx_tokens, Completion, Provider, ProviderError, StructuredRequest, Usage};

pub const DEFAULT_API_KEY_ENV: &str = "TASK_EXPOSURE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub chat_model: String,
    pub embed_model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "https://api.openai.com/v1".into(),
            chat_model: "gpt-4o-mini".into(),
            embed_model: "text-embedding-3-small".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            temperature: 0.0,
            max_tokens: 4096,
            timeout_secs: 120,
        }
    }
}

pub struct RemoteProvider {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: RemoteConfig) -> Result<Self, ProviderError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::MissingCredential(config.api_key_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteProvider { config, api_key, agent })
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        classify_status(status, &text)?;
        serde_json::from_str(&text).map_err(|e| ProviderError::Transport(format!("bad response body: {e}")))
    }
}

fn classify_status(status: u16, body: &str) -> Result<(), ProviderError> {
    let snippet: String = body.chars().take(300).collect();
    match status {
        200..=299 => Ok(()),
        408 | 429 | 500..=599 => Err(ProviderError::Transport(format!("HTTP {status}: {snippet}"))),
        _ => Err(ProviderError::Rejected(format!("HTTP {status}: {snippet}"))),
    }
}

pub fn chat_body(config: &RemoteConfig, request: &StructuredRequest) -> Value {
    let mut messages = Vec::new();
    if !request.system_prompt.is_empty() {
        messages.push(json!({"role": "system", "content": request.system_prompt}));
    }
    messages.push(json!({"role": "user", "content": request.user_prompt}));
    json!({
        "model": config.chat_model,
        "messages": messages,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
        "response_format": {
            "type": "json_schema",
            "json_schema": {"name": request.schema.name, "schema": request.schema.to_json_schema()}
        }
    })
}

pub fn parse_chat(body: &Value, request: &StructuredRequest) -> Result<Completion, ProviderError> {
    let raw = body["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| ProviderError::Transport("response has no message content".into()))?
        .to_string();
    let usage = Usage {
        input_tokens: body["usage"]["prompt_tokens"]
            .as_u64()
            .unwrap_or_else(|| approx_tokens(&request.system_prompt) + approx_tokens(&request.user_prompt)),
        output_tokens: body["usage"]["completion_tokens"].as_u64().unwrap_or_else(|| approx_tokens(&raw)),
    };
    Ok(Completion { raw, usage })
}

pub fn parse_embeddings(body: &Value, expected: usize) -> Result<Vec<Vec<f64>>, ProviderError> {
    let data = body["data"]
        .as_array()
        .ok_or_else(|| ProviderError::Transport("response has no data".into()))?;
    let mut out = vec![Vec::new(); expected];
    for (pos, item) in data.iter().enumerate() {
        let idx = item["index"].as_u64().map_or(pos, |i| i as usize);
        let v: Vec<f64> = item["embedding"]
            .as_array()
            .ok_or_else(|| ProviderError::Transport("embedding is not an array".into()))?
            .iter()
            .map(|x| x.as_f64().unwrap_or(f64::NAN))
            .collect();
        if idx >= expected || v.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::Rejected("malformed embedding".into()));
        }
        out[idx] = v;
    }
    if out.iter().any(|v| v.is_empty() || v.len() != out[0].len()) {
        return Err(ProviderError::Rejected("embeddings missing or of mixed dimension".into()));
    }
    Ok(out)
}

impl Provider for RemoteProvider {
    fn model_id(&self) -> String {
        format!("{}|{}", self.config.chat_model, self.config.embed_model)
    }

    fn complete(&self, request: &StructuredRequest) -> Result<Completion, ProviderError> {
        let body = self.post("chat/completions", &chat_body(&self.config, request))?;
        parse_chat(&body, request)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(ProviderError::EmptyInput(i));
        }
        let body = self.post("embeddings", &json!({"model": self.config.embed_model, "input": texts}))?;
        parse_embeddings(&body, texts.len())
    }
}

#[cfg(test)]
mod tests {
    use super::super::schema::{Field, FieldType, Schema};
    use super::*;

    fn req(system: &str) -> StructuredRequest {
        StructuredRequest::new("r", system, "hello".into(), Schema::new("S", "", vec![Field::new("x", FieldType::String)]))
    }

    #[test]
    fn body_shape() {
        let b = chat_body(&RemoteConfig::default(), &req(""));
        assert_eq!(b["messages"].as_array().unwrap().len(), 1);
        assert_eq!(b["temperature"], 0.0);
        assert_eq!(b["response_format"]["json_schema"]["name"], "S");
        assert_eq!(chat_body(&RemoteConfig::default(), &req("sys"))["messages"][0]["role"], "system");
    }

    #[test]
    fn parses_responses() {
        let body = json!({"choices":[{"message":{"content":"{\"x\":\"y\"}"}}],"usage":{"prompt_tokens":7,"completion_tokens":3}});
        let c = parse_chat(&body, &req("")).unwrap();
        assert_eq!(c.raw, "{\"x\":\"y\"}");
        assert_eq!(c.usage, Usage { input_tokens: 7, output_tokens: 3 });
        let e = json!({"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]});
        assert_eq!(parse_embeddings(&e, 2).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(parse_embeddings(&json!({"data":[{"embedding":[1.0]}]}), 2).is_err());
    }

    #[test]
    fn status_classes() {
        assert!(classify_status(200, "").is_ok());
        assert!(classify_status(429, "").unwrap_err().is_retryable());
        assert!(classify_status(503, "").unwrap_err().is_retryable());
        assert!(!classify_status(400, "").unwrap_err().is_retryable());
    }

    #[test]
    fn missing_key_is_reported() {
        let cfg = RemoteConfig {
            api_key_env: "TASK_EXPOSURE_TEST_UNSET_KEY".into(),
            ..Default::default()
        };
        assert!(matches!(RemoteProvider::from_env(cfg), Err(ProviderError::MissingCredential(_))));
    }
}
