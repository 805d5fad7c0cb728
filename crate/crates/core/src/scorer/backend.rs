use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::logprobs::{first_position_candidates, yes_probability};
use super::{PromptInstance, ScoreError, YesProbability};

pub const MOCK_ENDPOINT: &str = "mock";

/// Lookup table used by the `mock` endpoint: claim text → yes-probability.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockTable {
    #[serde(default = "default_mock_value")]
    pub default: f64,
    #[serde(default)]
    pub table: BTreeMap<String, f64>,
    /// Claims for which the mock reports a transport failure.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub fail: BTreeSet<String>,
    /// Artificial per-call latency in microseconds.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub latency_us: u64,
}

fn default_mock_value() -> f64 {
    0.5
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl MockTable {
    pub fn with_default(default: f64) -> Self {
        Self { default, ..Self::default() }
    }

    pub fn insert(&mut self, claim: impl Into<String>, value: f64) -> &mut Self {
        self.table.insert(claim.into(), value);
        self
    }
}

/// Configuration of one scoring model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBackendRef {
    pub model_id: String,
    /// Completion endpoint URL, or the literal `mock`.
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template_id: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_backoff_ms")]
    pub retry_backoff_ms: u64,
    /// `logprobs` (top-k) requested from the endpoint.
    #[serde(default = "default_top_logprobs")]
    pub top_logprobs: u32,
    /// Maximum in-flight requests to this backend.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Model name sent on the wire; defaults to `model_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockTable>,
}

fn default_timeout_ms() -> u64 {
    30_000
}
fn default_max_retries() -> u32 {
    2
}
fn default_retry_backoff_ms() -> u64 {
    200
}
fn default_top_logprobs() -> u32 {
    20
}
fn default_concurrency() -> usize {
    4
}

impl ModelBackendRef {
    pub fn mock(model_id: impl Into<String>, table: MockTable) -> Self {
        Self {
            model_id: model_id.into(),
            endpoint: MOCK_ENDPOINT.to_string(),
            prompt_template_id: None,
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            retry_backoff_ms: default_retry_backoff_ms(),
            top_logprobs: default_top_logprobs(),
            concurrency: default_concurrency(),
            remote_model: None,
            api_key: None,
            mock: Some(table),
        }
    }

    pub fn http(model_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), mock: None, ..Self::mock(model_id, MockTable::default()) }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn is_mock(&self) -> bool {
        self.endpoint == MOCK_ENDPOINT
    }

    /// `VERISLM_BACKEND_<ID>` with the id upper-cased and every
    /// non-alphanumeric character replaced by `_`.
    pub fn env_prefix(&self) -> String {
        let id: String = self
            .model_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
            .collect();
        format!("VERISLM_BACKEND_{id}")
    }

    /// Applies `<prefix>_URL` and `<prefix>_KEY` from the environment.
    pub fn apply_env(&mut self) {
        let prefix = self.env_prefix();
        if let Ok(url) = std::env::var(format!("{prefix}_URL")) {
            if !url.is_empty() {
                self.endpoint = url;
            }
        }
        if let Ok(key) = std::env::var(format!("{prefix}_KEY")) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.model_id.trim().is_empty() {
            return Err("model_id is empty".into());
        }
        if self.timeout_ms == 0 {
            return Err(format!("{}: timeout must be positive", self.model_id));
        }
        if self.concurrency == 0 {
            return Err(format!("{}: concurrency must be at least 1", self.model_id));
        }
        if self.is_mock() {
            let table =
                self.mock.as_ref().ok_or_else(|| format!("{}: mock endpoint without a mock table", self.model_id))?;
            let bad = std::iter::once(&table.default).chain(table.table.values()).any(|v| !(0.0..=1.0).contains(v));
            if bad {
                return Err(format!("{}: mock values must lie in [0, 1]", self.model_id));
            }
        } else if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(format!(
                "{}: endpoint must be an http(s) URL or `mock`, got `{}`",
                self.model_id, self.endpoint
            ));
        }
        Ok(())
    }
}

/// A source of first-token yes-probabilities.
pub trait Backend: Send + Sync {
    fn model_id(&self) -> &str;
    fn score(&self, prompt: &PromptInstance) -> Result<YesProbability, ScoreError>;
}

/// Pure lookup on the claim text.
#[derive(Debug, Clone)]
pub struct MockBackend {
    model_id: String,
    table: MockTable,
}

impl MockBackend {
    pub fn new(model_id: impl Into<String>, table: MockTable) -> Self {
        Self { model_id: model_id.into(), table }
    }
}

impl Backend for MockBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn score(&self, prompt: &PromptInstance) -> Result<YesProbability, ScoreError> {
        if self.table.latency_us > 0 {
            std::thread::sleep(Duration::from_micros(self.table.latency_us));
        }
        if self.table.fail.contains(&prompt.claim) {
            return Err(ScoreError::BackendUnavailable {
                model_id: self.model_id.clone(),
                attempts: 1,
                reason: "mock failure".into(),
            });
        }
        let value = self.table.table.get(&prompt.claim).copied().unwrap_or(self.table.default);
        Ok(YesProbability { value, model_id: self.model_id.clone(), token_evidence: vec![("yes".to_string(), value)] })
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    available: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self { available: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Retryable(String),
    Fatal(ScoreError),
}

/// Completion-API client that reads the first position's top-k logprobs.
pub struct HttpBackend {
    config: ModelBackendRef,
    limiter: Limiter,
    client: OnceLock<Result<Client, String>>,
}

impl HttpBackend {
    pub fn new(config: ModelBackendRef) -> Self {
        let limiter = Limiter::new(config.concurrency.max(1));
        Self { config, limiter, client: OnceLock::new() }
    }

    /// Request body for one prompt.
    pub fn request_body(&self, prompt: &PromptInstance) -> Value {
        json!({
            "model": self.config.remote_model.as_deref().unwrap_or(&self.config.model_id),
            "prompt": prompt.rendered,
            "max_tokens": 1,
            "temperature": 0,
            "logprobs": self.config.top_logprobs,
        })
    }

    fn client(&self) -> Result<&Client, String> {
        self.client
            .get_or_init(|| Client::builder().timeout(self.config.timeout()).build().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn attempt(&self, body: &Value) -> Result<YesProbability, Attempt> {
        let client = self.client().map_err(Attempt::Retryable)?;
        let mut req = client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(ScoreError::BackendUnavailable {
                model_id: self.config.model_id.clone(),
                attempts: 1,
                reason: format!("HTTP {status}"),
            }));
        }
        let malformed = |reason: String| {
            Attempt::Fatal(ScoreError::MalformedLogprobResponse { model_id: self.config.model_id.clone(), reason })
        };
        let json: Value = resp.json().map_err(|e| malformed(e.to_string()))?;
        let candidates = first_position_candidates(&json).map_err(malformed)?;
        yes_probability(&self.config.model_id, &candidates).ok_or_else(|| malformed("no finite logprobs".into()))
    }
}

impl Backend for HttpBackend {
    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn score(&self, prompt: &PromptInstance) -> Result<YesProbability, ScoreError> {
        let body = self.request_body(prompt);
        let _permit = self.limiter.acquire();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(y) => return Ok(y),
                Err(Attempt::Fatal(ScoreError::BackendUnavailable { model_id, reason, .. })) => {
                    return Err(ScoreError::BackendUnavailable { model_id, attempts, reason })
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(reason)) => {
                    if attempts > self.config.max_retries {
                        return Err(ScoreError::BackendUnavailable {
                            model_id: self.config.model_id.clone(),
                            attempts,
                            reason,
                        });
                    }
                    let backoff = self.config.retry_backoff_ms.saturating_mul(1 << (attempts - 1).min(6));
                    std::thread::sleep(Duration::from_millis(backoff));
                }
            }
        }
    }
}

/// Builds the backend named by `config`.
pub fn build_backend(config: &ModelBackendRef) -> Result<Box<dyn Backend>, String> {
    config.validate()?;
    if config.is_mock() {
        let table = config.mock.clone().unwrap_or_default();
        Ok(Box::new(MockBackend::new(config.model_id.clone(), table)))
    } else {
        Ok(Box::new(HttpBackend::new(config.clone())))
    }
}
