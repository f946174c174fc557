//! Deterministic offline provider backed by a fingerprint fixture table.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{approx_tokens, Completion, Provider, ProviderError, StructuredRequest, Usage};

pub const MOCK_EMBED_DIM: usize = 64;

/// What to do when no fixture matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissPolicy {
    Strict,
    /// Answer with the schema's minimal valid payload.
    SchemaDefault,
}

pub type Responder = Box<dyn Fn(&StructuredRequest) -> Option<String> + Send + Sync>;

#[derive(Debug, Default)]
struct Entry {
    payloads: Vec<String>,
    next: usize,
}

/// Fixture table: fingerprint → ordered payloads. Successive calls with the
/// same fingerprint walk the list and then repeat its last element, so a
/// fixture can script "invalid first, valid on retry".
pub struct MockProvider {
    model: String,
    table: Mutex<BTreeMap<String, Entry>>,
    miss: MissPolicy,
    responder: Option<Responder>,
    recorded: Mutex<BTreeMap<String, Vec<String>>>,
    calls: Mutex<u64>,
}

impl MockProvider {
    pub fn new(miss: MissPolicy) -> Self {
        MockProvider {
            model: "mock".to_string(),
            table: Mutex::new(BTreeMap::new()),
            miss,
            responder: None,
            recorded: Mutex::new(BTreeMap::new()),
            calls: Mutex::new(0),
        }
    }

    pub fn strict() -> Self {
        Self::new(MissPolicy::Strict)
    }

    /// Model identity reported to the cache and stage fingerprints.
    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model = id.into();
        self
    }

    /// Consulted on a fixture miss before the miss policy; its answers are
    /// recorded and can be saved as a fixture file.
    pub fn with_responder(mut self, r: Responder) -> Self {
        self.responder = Some(r);
        self
    }

    pub fn insert(&self, fingerprint: &str, payloads: Vec<String>) {
        self.table.lock().unwrap().insert(
            fingerprint.to_string(),
            Entry { payloads, next: 0 },
        );
    }

    pub fn insert_for(&self, request: &StructuredRequest, payloads: Vec<String>) {
        self.insert(&request.fingerprint(), payloads);
    }

    /// Load `{fingerprint: [payload, ...]}`. A JSON string element is used
    /// verbatim as raw text; any other value is serialised.
    pub fn load_fixtures(&self, path: &Path) -> Result<usize, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let doc: BTreeMap<String, Vec<Value>> =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let n = doc.len();
        for (fp, items) in doc {
            let payloads = items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                })
                .collect();
            self.insert(&fp, payloads);
        }
        Ok(n)
    }

    pub fn recorded(&self) -> BTreeMap<String, Vec<String>> {
        self.recorded.lock().unwrap().clone()
    }

    /// Write recorded answers as a fixture file (payloads stored as JSON
    /// values when they parse, raw strings otherwise).
    pub fn save_recorded(&self, path: &Path) -> std::io::Result<()> {
        let rec = self.recorded();
        let doc: BTreeMap<&String, Vec<Value>> = rec
            .iter()
            .map(|(k, v)| {
                let items = v
                    .iter()
                    .map(|p| serde_json::from_str(p).unwrap_or_else(|_| Value::String(p.clone())))
                    .collect();
                (k, items)
            })
            .collect();
        let text = serde_json::to_string_pretty(&doc).expect("fixture serialises");
        std::fs::write(path, text + "\n")
    }

    pub fn call_count(&self) -> u64 {
        *self.calls.lock().unwrap()
    }
}

impl Provider for MockProvider {
    fn model_id(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, request: &StructuredRequest) -> Result<Completion, ProviderError> {
        *self.calls.lock().unwrap() += 1;
        let fp = request.fingerprint();
        let hit = {
            let mut table = self.table.lock().unwrap();
            table.get_mut(&fp).filter(|e| !e.payloads.is_empty()).map(|e| {
                let i = e.next.min(e.payloads.len() - 1);
                e.next += 1;
                e.payloads[i].clone()
            })
        };
        let raw = match hit {
            Some(raw) => raw,
            None => match self.responder.as_ref().and_then(|r| r(request)) {
                Some(raw) => {
                    self.recorded.lock().unwrap().entry(fp).or_default().push(raw.clone());
                    raw
                }
                None => match self.miss {
                    MissPolicy::Strict => return Err(ProviderError::FixtureMiss(fp)),
                    MissPolicy::SchemaDefault => request.schema.default_payload().to_string(),
                },
            },
        };
        let usage = Usage {
            input_tokens: approx_tokens(&request.system_prompt) + approx_tokens(&request.user_prompt),
            output_tokens: approx_tokens(&raw),
        };
        Ok(Completion { raw, usage })
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(ProviderError::EmptyInput(i));
        }
        Ok(texts.iter().map(|t| hashed_embedding(t, MOCK_EMBED_DIM)).collect())
    }
}

/// Signed feature hashing of unigrams and bigrams, L2-normalised.
pub fn hashed_embedding(text: &str, dim: usize) -> Vec<f64> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut v = vec![0.0; dim];
    let mut add = |feature: &str, w: f64| {
        let h = Sha256::digest(feature.as_bytes());
        let idx = u64::from_le_bytes(h[..8].try_into().unwrap()) as usize % dim;
        let sign = if h[8] & 1 == 0 { 1.0 } else { -1.0 };
        v[idx] += sign * w;
    };
    for t in &tokens {
        add(t, 1.0);
    }
    for w in tokens.windows(2) {
        add(&format!("{} {}", w[0], w[1]), 0.5);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
