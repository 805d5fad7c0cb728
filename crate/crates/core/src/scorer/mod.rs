//! Yes-probability scoring against one or more model backends.

mod backend;
pub mod logprobs;
mod prompt;

use std::collections::{BTreeSet, HashMap};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{build_backend, Backend, HttpBackend, MockBackend, MockTable, ModelBackendRef, MOCK_ENDPOINT};
pub use prompt::{render_prompt, PromptError, PromptInstance, PromptTemplate, TemplateRegistry, DEFAULT_TEMPLATE_ID};

/// P(first generated token is "yes") for one prompt and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YesProbability {
    pub value: f64,
    pub model_id: String,
    /// Matched tokens with their renormalized probabilities.
    pub token_evidence: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("backend `{model_id}` unavailable after {attempts} attempt(s): {reason}")]
    BackendUnavailable { model_id: String, attempts: u32, reason: String },
    #[error("backend `{model_id}` returned no usable first-token distribution: {reason}")]
    MalformedLogprobResponse { model_id: String, reason: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScorerConfigError {
    #[error("no backends configured")]
    NoBackends,
    #[error("duplicate model_id `{0}`")]
    DuplicateModel(String),
    #[error("invalid backend: {0}")]
    InvalidBackend(String),
    #[error("backend `{model_id}` uses unknown template `{template}`")]
    UnknownTemplate { model_id: String, template: String },
}

type CacheKey = (String, [u8; 32]);

/// Entries kept before the cache starts over.
pub const CACHE_CAPACITY: usize = 200_000;

/// Memo of successful scores keyed on model and prompt digest.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<CacheKey, YesProbability>>,
}

impl ScoreCache {
    fn key(model_id: &str, rendered: &str) -> CacheKey {
        (model_id.to_string(), Sha256::digest(rendered.as_bytes()).into())
    }

    pub fn get(&self, model_id: &str, rendered: &str) -> Option<YesProbability> {
        let key = Self::key(model_id, rendered);
        self.entries.read().unwrap_or_else(|e| e.into_inner()).get(&key).cloned()
    }

    pub fn put(&self, model_id: &str, rendered: &str, value: YesProbability) {
        let key = Self::key(model_id, rendered);
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if entries.len() >= CACHE_CAPACITY {
            entries.clear();
        }
        entries.insert(key, value);
    }

    pub fn clear(&self) {
        self.entries.write().unwrap_or_else(|e| e.into_inner()).clear();
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Slot {
    config: ModelBackendRef,
    backend: Box<dyn Backend>,
    template_id: String,
}

/// The set of configured backends plus the shared template registry and cache.
pub struct Scorer {
    slots: Vec<Slot>,
    templates: TemplateRegistry,
    cache: ScoreCache,
}

impl Scorer {
    pub fn new(
        configs: &[ModelBackendRef],
        templates: TemplateRegistry,
        default_template: &str,
    ) -> Result<Self, ScorerConfigError> {
        let mut scorer = Self { slots: Vec::new(), templates, cache: ScoreCache::default() };
        for config in configs {
            let backend = build_backend(config).map_err(ScorerConfigError::InvalidBackend)?;
            scorer.push(config.clone(), backend, default_template)?;
        }
        if scorer.slots.is_empty() {
            return Err(ScorerConfigError::NoBackends);
        }
        Ok(scorer)
    }

    /// Adds a caller-provided backend implementation.
    pub fn push(
        &mut self,
        config: ModelBackendRef,
        backend: Box<dyn Backend>,
        default_template: &str,
    ) -> Result<(), ScorerConfigError> {
        if self.slots.iter().any(|s| s.config.model_id == config.model_id) {
            return Err(ScorerConfigError::DuplicateModel(config.model_id));
        }
        let template_id = config.prompt_template_id.clone().unwrap_or_else(|| default_template.to_string());
        if !self.templates.contains(&template_id) {
            return Err(ScorerConfigError::UnknownTemplate { model_id: config.model_id, template: template_id });
        }
        self.slots.push(Slot { config, backend, template_id });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.slots.iter().map(|s| s.config.model_id.clone()).collect()
    }

    pub fn config(&self, model: usize) -> &ModelBackendRef {
        &self.slots[model].config
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    /// Renders the verification prompt using `model`'s template.
    pub fn render(
        &self,
        model: usize,
        question: &str,
        context: &str,
        claim: &str,
    ) -> Result<PromptInstance, PromptError> {
        self.templates.render(question, context, claim, &self.slots[model].template_id)
    }

    /// Scores one rendered prompt on backend `model`, consulting the cache.
    pub fn score_claim(&self, model: usize, prompt: &PromptInstance) -> Result<YesProbability, ScoreError> {
        let slot = &self.slots[model];
        let id = &slot.config.model_id;
        if let Some(hit) = self.cache.get(id, &prompt.rendered) {
            return Ok(hit);
        }
        let y = slot.backend.score(prompt)?;
        self.cache.put(id, &prompt.rendered, y.clone());
        Ok(y)
    }

    /// Scores the unsplit response as a single claim.
    pub fn score_response_whole(
        &self,
        model: usize,
        question: &str,
        context: &str,
        response: &str,
    ) -> Result<YesProbability, ScoreError> {
        let prompt = self.render(model, question, context, response)?;
        self.score_claim(model, &prompt)
    }
}

/// Model ids must be unique within one configuration.
pub fn check_unique_ids(configs: &[ModelBackendRef]) -> Result<(), ScorerConfigError> {
    let mut seen = BTreeSet::new();
    for c in configs {
        if !seen.insert(c.model_id.as_str()) {
            return Err(ScorerConfigError::DuplicateModel(c.model_id.clone()));
        }
    }
    Ok(())
}
