//! Concurrent batch submission with retries, validation and caching.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cache::{completion_key, embedding_key, DiskCache};
use super::schema::validate_payload;
use super::{Provider, ProviderError, StructuredRequest, Usage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchPolicy {
    pub max_in_flight: usize,
    pub max_attempts: u32,
    /// Delay before the second attempt after a transport failure; doubles
    /// for each further attempt.
    pub backoff: Duration,
    pub embed_chunk: usize,
}

impl Default for BatchPolicy {
    fn default() -> Self {
        BatchPolicy {
            max_in_flight: 8,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            embed_chunk: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureClass {
    Transport,
    SchemaInvalid,
    Rejected,
    FixtureMiss,
}

impl FailureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureClass::Transport => "Transport",
            FailureClass::SchemaInvalid => "SchemaInvalid",
            FailureClass::Rejected => "Rejected",
            FailureClass::FixtureMiss => "FixtureMiss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub request_id: String,
    pub class: FailureClass,
    pub message: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredResponse {
    pub request_id: String,
    pub payload: Value,
    pub raw: String,
    pub attempts: u32,
    pub cached: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub submitted: usize,
    pub succeeded: usize,
    pub failed: Vec<(String, FailureClass)>,
    pub usage: Usage,
    pub provider_calls: u64,
    pub cache_hits: u64,
}

impl BatchReport {
    pub fn reconciles(&self) -> bool {
        self.submitted == self.succeeded + self.failed.len()
    }

    pub fn merge(&mut self, other: &BatchReport) {
        self.submitted += other.submitted;
        self.succeeded += other.succeeded;
        self.failed.extend(other.failed.iter().cloned());
        self.usage += other.usage;
        self.provider_calls += other.provider_calls;
        self.cache_hits += other.cache_hits;
    }
}

/// Results in input order, one per request.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub results: Vec<Result<StructuredResponse, Failure>>,
    pub report: BatchReport,
}

/// Extra acceptance rule applied after schema validation. An `Err` counts as
/// a schema failure and triggers a retry.
pub type SemanticCheck<'a> = dyn Fn(&StructuredRequest, &Value) -> Result<(), String> + Sync + 'a;

pub fn no_check(_: &StructuredRequest, _: &Value) -> Result<(), String> {
    Ok(())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("request id `{0}` appears more than once in the batch")]
    DuplicateRequestId(String),
}

pub struct Gateway {
    provider: Box<dyn Provider>,
    cache: Option<DiskCache>,
    policy: BatchPolicy,
}

impl Gateway {
    pub fn new(provider: Box<dyn Provider>, cache: Option<DiskCache>, policy: BatchPolicy) -> Self {
        Gateway { provider, cache, policy }
    }

    pub fn provider(&self) -> &dyn Provider {
        self.provider.as_ref()
    }

    pub fn policy(&self) -> BatchPolicy {
        self.policy
    }

    pub fn submit_batch(
        &self,
        requests: &[StructuredRequest],
        check: &SemanticCheck<'_>,
    ) -> Result<BatchOutcome, GatewayError> {
        let mut ids = BTreeSet::new();
        for r in requests {
            if !ids.insert(r.request_id.as_str()) {
                return Err(GatewayError::DuplicateRequestId(r.request_id.clone()));
            }
        }
        let model = self.provider.model_id();
        let slots: Mutex<Vec<Option<Result<StructuredResponse, Failure>>>> =
            Mutex::new((0..requests.len()).map(|_| None).collect());
        let usage = Mutex::new(Usage::default());
        let calls = AtomicU64::new(0);
        let hits = AtomicU64::new(0);
        let next = AtomicUsize::new(0);
        let workers = self.policy.max_in_flight.max(1).min(requests.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= requests.len() {
                        break;
                    }
                    let (result, u, c, hit) = self.run_one(&requests[i], &model, check);
                    *usage.lock().unwrap() += u;
                    calls.fetch_add(c, Ordering::Relaxed);
                    if hit {
                        hits.fetch_add(1, Ordering::Relaxed);
                    }
                    slots.lock().unwrap()[i] = Some(result);
                });
            }
        });
        let results: Vec<_> = slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect();
        let failed: Vec<(String, FailureClass)> = results
            .iter()
            .filter_map(|r| r.as_ref().err().map(|f| (f.request_id.clone(), f.class)))
            .collect();
        let report = BatchReport {
            submitted: requests.len(),
            succeeded: requests.len() - failed.len(),
            failed,
            usage: usage.into_inner().unwrap(),
            provider_calls: calls.into_inner(),
            cache_hits: hits.into_inner(),
        };
        Ok(BatchOutcome { results, report })
    }

    fn run_one(
        &self,
        req: &StructuredRequest,
        model: &str,
        check: &SemanticCheck<'_>,
    ) -> (Result<StructuredResponse, Failure>, Usage, u64, bool) {
        let key = completion_key(model, &req.fingerprint());
        if let Some(raw) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            if let Ok(payload) = validate_payload(&raw, &req.schema) {
                if check(req, &payload).is_ok() {
                    let resp = StructuredResponse {
                        request_id: req.request_id.clone(),
                        payload,
                        raw,
                        attempts: 0,
                        cached: true,
                    };
                    return (Ok(resp), Usage::default(), 0, true);
                }
            }
            log::warn!("cached response for {} no longer validates; refetching", req.request_id);
        }
        let mut usage = Usage::default();
        let mut calls = 0;
        let mut last = (FailureClass::Transport, String::new());
        let attempts = self.policy.max_attempts.max(1);
        for attempt in 1..=attempts {
            calls += 1;
            let fail = |class, message: String| Failure {
                request_id: req.request_id.clone(),
                class,
                message,
                attempts: attempt,
            };
            match self.provider.complete(req) {
                Err(e) if e.is_retryable() => {
                    last = (FailureClass::Transport, e.to_string());
                    if attempt < attempts && !self.policy.backoff.is_zero() {
                        std::thread::sleep(self.policy.backoff * 2u32.pow(attempt - 1));
                    }
                }
                Err(ProviderError::FixtureMiss(fp)) => {
                    return (Err(fail(FailureClass::FixtureMiss, fp)), usage, calls, false);
                }
                Err(e) => return (Err(fail(FailureClass::Rejected, e.to_string())), usage, calls, false),
                Ok(c) => {
                    usage += c.usage;
                    let payload = match validate_payload(&c.raw, &req.schema) {
                        Ok(p) => p,
                        Err(e) => {
                            log::debug!("{} attempt {attempt}: {e}", req.request_id);
                            last = (FailureClass::SchemaInvalid, e.to_string());
                            continue;
                        }
                    };
                    if let Err(msg) = check(req, &payload) {
                        log::debug!("{} attempt {attempt}: {msg}", req.request_id);
                        last = (FailureClass::SchemaInvalid, msg);
                        continue;
                    }
                    if let Some(cache) = &self.cache {
                        if let Err(e) = cache.put(&key, &c.raw) {
                            log::warn!("cache write failed for {}: {e}", req.request_id);
                        }
                    }
                    let resp = StructuredResponse {
                        request_id: req.request_id.clone(),
                        payload,
                        raw: c.raw,
                        attempts: attempt,
                        cached: false,
                    };
                    return (Ok(resp), usage, calls, false);
                }
            }
        }
        let failure = Failure {
            request_id: req.request_id.clone(),
            class: last.0,
            message: last.1,
            attempts,
        };
        (Err(failure), usage, calls, false)
    }

    /// Embed every text, using the cache where possible. Failures are per
    /// text; an empty text fails without reaching the provider.
    pub fn embed(&self, texts: &[String]) -> Vec<Result<Vec<f64>, ProviderError>> {
        let model = self.provider.model_id();
        let mut out: Vec<Option<Result<Vec<f64>, ProviderError>>> = vec![None; texts.len()];
        let mut pending = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            if t.trim().is_empty() {
                out[i] = Some(Err(ProviderError::EmptyInput(i)));
            } else if let Some(v) = self.cache.as_ref().and_then(|c| c.get(&embedding_key(&model, t))).and_then(|s| decode_vector(&s)) {
                out[i] = Some(Ok(v));
            } else {
                pending.push(i);
            }
        }
        for chunk in pending.chunks(self.policy.embed_chunk.max(1)) {
            let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
            let mut result = Err(ProviderError::Transport("not attempted".into()));
            for attempt in 1..=self.policy.max_attempts.max(1) {
                result = self.provider.embed(&batch);
                match &result {
                    Err(e) if e.is_retryable() && attempt < self.policy.max_attempts => {
                        if !self.policy.backoff.is_zero() {
                            std::thread::sleep(self.policy.backoff * 2u32.pow(attempt - 1));
                        }
                    }
                    _ => break,
                }
            }
            match result {
                Ok(vectors) if vectors.len() == batch.len() => {
                    for (&i, v) in chunk.iter().zip(vectors) {
                        if let Some(cache) = &self.cache {
                            if let Err(e) = cache.put(&embedding_key(&model, &texts[i]), &encode_vector(&v)) {
                                log::warn!("embedding cache write failed: {e}");
                            }
                        }
                        out[i] = Some(Ok(v));
                    }
                }
                Ok(vectors) => {
                    let e = ProviderError::Rejected(format!("{} vectors for {} texts", vectors.len(), batch.len()));
                    for &i in chunk {
                        out[i] = Some(Err(e.clone()));
                    }
                }
                Err(e) => {
                    for &i in chunk {
                        out[i] = Some(Err(e.clone()));
                    }
                }
            }
        }
        out.into_iter().map(|r| r.expect("every text resolved")).collect()
    }
}

/// Bit-exact text form for cached vectors.
fn encode_vector(v: &[f64]) -> String {
    let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
    serde_json::to_string(&bits).expect("u64 list serialises")
}

fn decode_vector(s: &str) -> Option<Vec<f64>> {
    let bits: Vec<u64> = serde_json::from_str(s).ok()?;
    Some(bits.into_iter().map(f64::from_bits).collect())
}
