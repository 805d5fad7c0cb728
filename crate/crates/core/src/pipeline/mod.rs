//! End-to-end verification: split → score → normalize → combine → aggregate.

mod config;
mod experiment;

use std::fmt;
use std::sync::RwLock;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{PipelineConfig, DEFAULT_HISTOGRAM_BINS, DEFAULT_THRESHOLD};
pub use experiment::{ExperimentOutcome, MetricsReport};

use crate::aggregator::{
    aggregate, combine_models, decide, AggregationConfig, AggregationError, Cell, MeanKind, ModelCell,
    SentenceBreakdown, SentenceScoreMatrix, VerificationReport,
};
use crate::calibration::{fit_profile, CalibrationError, CalibrationProfile, CalibrationStore};
use crate::dataset::{DatasetError, DatasetManifest, Split};
use crate::evaluator::EvalError;
use crate::exec::Strategy;
use crate::scorer::{PromptError, ScoreError, Scorer, ScorerConfigError, TemplateRegistry};
use crate::splitter::{RuleSegmenter, Segmenter, SplitError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Score every sentence with every model, then calibrate and aggregate.
    #[default]
    Split,
    /// Score the unsplit response with the first backend and threshold the
    /// raw probability.
    WholeResponse,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Split => "split",
            Mode::WholeResponse => "whole_response",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "split" => Ok(Mode::Split),
            "whole_response" | "whole" => Ok(Mode::WholeResponse),
            _ => Err(format!("expected split|whole_response, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRequest {
    pub question: String,
    pub context: String,
    pub response: String,
}

impl VerificationRequest {
    pub fn new(question: impl Into<String>, context: impl Into<String>, response: impl Into<String>) -> Self {
        Self { question: question.into(), context: context.into(), response: response.into() }
    }
}

/// Per-call overrides of the configured mode and mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub mode: Option<Mode>,
    pub mean: Option<MeanKind>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ScorerConfigError> for PipelineError {
    fn from(e: ScorerConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl PipelineError {
    /// 2 for configuration or input problems, 3 for backend failures,
    /// 4 for degenerate evaluations.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Score(ScoreError::Prompt(_)) => 2,
            PipelineError::Score(_) => 3,
            PipelineError::Aggregation(
                AggregationError::AllModelsFailed { .. } | AggregationError::CellFailed { .. },
            ) => 3,
            PipelineError::Eval(_) => 4,
            _ => 2,
        }
    }
}

/// A configured verifier. Safe to share across threads; each call keeps its
/// state local apart from the score cache and the calibration store.
pub struct Pipeline {
    config: PipelineConfig,
    scorer: Scorer,
    segmenter: Box<dyn Segmenter>,
    store: RwLock<CalibrationStore>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let mut templates = TemplateRegistry::default();
        for (id, source) in &config.templates {
            templates.register(id, source)?;
        }
        let scorer = Scorer::new(&config.backends, templates, &config.template_id)?;
        Ok(Self { config, scorer, segmenter: Box::new(RuleSegmenter), store: RwLock::new(CalibrationStore::default()) })
    }

    /// Like [`Pipeline::new`], then loads the configured store if the file exists.
    pub fn open(config: PipelineConfig) -> Result<Self, PipelineError> {
        let pipeline = Self::new(config)?;
        if let Some(path) = &pipeline.config.calibration_store {
            if path.exists() {
                pipeline.set_calibration(CalibrationStore::load(path)?);
            }
        }
        Ok(pipeline)
    }

    pub fn with_segmenter(mut self, segmenter: Box<dyn Segmenter>) -> Self {
        self.segmenter = segmenter;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.scorer.model_ids()
    }

    pub fn set_calibration(&self, store: CalibrationStore) {
        *self.store.write().unwrap_or_else(|e| e.into_inner()) = store;
    }

    pub fn calibration(&self) -> CalibrationStore {
        self.store.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn strategy(&self) -> Strategy {
        self.config.execution
    }

    pub fn verify(&self, request: &VerificationRequest) -> Result<VerificationReport, PipelineError> {
        self.verify_with(request, VerifyOptions::default())
    }

    pub fn verify_with(
        &self,
        request: &VerificationRequest,
        options: VerifyOptions,
    ) -> Result<VerificationReport, PipelineError> {
        if request.response.trim().is_empty() {
            return Err(SplitError::EmptyResponse.into());
        }
        match options.mode.unwrap_or(self.config.mode) {
            Mode::WholeResponse => self.verify_whole(request),
            Mode::Split => {
                let aggregation = AggregationConfig {
                    mean_kind: options.mean.unwrap_or(self.config.aggregation.mean_kind),
                    ..self.config.aggregation
                };
                self.verify_split(request, &aggregation)
            }
        }
    }

    fn verify_whole(&self, request: &VerificationRequest) -> Result<VerificationReport, PipelineError> {
        let y = self.scorer.score_response_whole(0, &request.question, &request.context, &request.response)?;
        Ok(VerificationReport {
            mode: Mode::WholeResponse,
            mean_kind: None,
            epsilon: self.config.aggregation.epsilon,
            models: vec![self.scorer.config(0).model_id.clone()],
            per_sentence: Vec::new(),
            final_score: y.value,
            threshold: self.config.threshold,
            decision: decide(y.value, self.config.threshold),
            whole_response: Some(y),
        })
    }

    fn profiles(&self) -> Result<Vec<CalibrationProfile>, PipelineError> {
        let store = self.store.read().unwrap_or_else(|e| e.into_inner());
        self.scorer
            .model_ids()
            .into_iter()
            .map(|id| {
                let p = store.get(&id).cloned().ok_or(CalibrationError::MissingProfile(id))?;
                if !p.usable {
                    return Err(CalibrationError::UnusableProfile { model_id: p.model_id }.into());
                }
                Ok(p)
            })
            .collect()
    }

    fn verify_split(
        &self,
        request: &VerificationRequest,
        aggregation: &AggregationConfig,
    ) -> Result<VerificationReport, PipelineError> {
        let spans = self.segmenter.split(&request.response)?;
        let profiles = self.profiles()?;
        for (name, value) in [("question", &request.question), ("context", &request.context)] {
            if value.trim().is_empty() {
                return Err(PromptError::EmptyField(name).into());
            }
        }

        let models = self.scorer.len();
        let cells: Vec<(usize, usize)> = (0..models).flat_map(|m| (0..spans.len()).map(move |j| (m, j))).collect();
        let scored = self.strategy().try_map(&cells, |&(m, j)| {
            let prompt = self.scorer.render(m, &request.question, &request.context, &spans[j].text)?;
            Ok::<_, PipelineError>(match self.scorer.score_claim(m, &prompt) {
                Ok(y) => Cell::Ok { raw: y.value, normalized: profiles[m].normalize(y.value)? },
                Err(e @ (ScoreError::BackendUnavailable { .. } | ScoreError::MalformedLogprobResponse { .. })) => {
                    Cell::Failed { reason: e.to_string() }
                }
                Err(e) => return Err(e.into()),
            })
        })?;
        let mut rows: Vec<Vec<Cell>> = vec![Vec::with_capacity(spans.len()); models];
        for (&(m, _), cell) in cells.iter().zip(scored) {
            rows[m].push(cell);
        }
        let matrix = SentenceScoreMatrix::new(self.scorer.model_ids(), rows)?;
        let combined = combine_models(&matrix, aggregation.on_failed_cell)?;
        let final_score = aggregate(&combined, aggregation)?;

        let per_sentence = spans
            .iter()
            .zip(&combined)
            .enumerate()
            .map(|(j, (span, &combined))| SentenceBreakdown {
                index: span.index,
                text: span.text.clone(),
                byte_range: span.byte_range.clone(),
                combined,
                models: (0..models)
                    .map(|m| {
                        let model_id = matrix.model_ids()[m].clone();
                        match matrix.cell(m, j) {
                            Cell::Ok { raw, normalized } => {
                                ModelCell { model_id, raw: Some(*raw), normalized: Some(*normalized), error: None }
                            }
                            Cell::Failed { reason } => {
                                ModelCell { model_id, raw: None, normalized: None, error: Some(reason.clone()) }
                            }
                        }
                    })
                    .collect(),
            })
            .collect();

        Ok(VerificationReport {
            mode: Mode::Split,
            mean_kind: Some(aggregation.mean_kind),
            epsilon: aggregation.epsilon,
            models: matrix.model_ids().to_vec(),
            per_sentence,
            whole_response: None,
            final_score,
            threshold: self.config.threshold,
            decision: decide(final_score, self.config.threshold),
        })
    }

    /// Raw sentence scores of every calibration-split response, per model.
    pub fn calibration_scores(&self, manifest: &DatasetManifest) -> Result<Vec<Vec<f64>>, PipelineError> {
        let mut claims = Vec::new();
        for record in manifest.records_in(Split::Calibration) {
            for span in self.segmenter.split(&record.response)? {
                claims.push((record, span.text));
            }
        }
        (0..self.scorer.len())
            .map(|m| {
                self.strategy().try_map(&claims, |(record, claim)| {
                    let prompt = self.scorer.render(m, &record.question, &record.context, claim)?;
                    Ok::<_, PipelineError>(self.scorer.score_claim(m, &prompt)?.value)
                })
            })
            .collect()
    }

    /// Fits one profile per backend on the calibration split, installs the
    /// new store and persists it when a store path is configured.
    pub fn calibrate(&self, manifest: &DatasetManifest) -> Result<CalibrationStore, PipelineError> {
        let scores = self.calibration_scores(manifest)?;
        let now = Utc::now();
        let mut store = CalibrationStore::default();
        let mut shortfall = None;
        for (id, values) in self.scorer.model_ids().iter().zip(&scores) {
            match fit_profile(id, values, &self.config.calibration, now) {
                Ok(profile) => store.upsert(profile),
                // Kept in the store, flagged unusable, and reported after persisting.
                Err(CalibrationError::InsufficientSamples { profile, min_samples }) => {
                    store.upsert((*profile).clone());
                    shortfall.get_or_insert(CalibrationError::InsufficientSamples { profile, min_samples });
                }
                Err(e) => return Err(e.into()),
            }
        }
        if let Some(path) = &self.config.calibration_store {
            store.save(path)?;
        }
        self.set_calibration(store.clone());
        match shortfall {
            Some(e) => Err(e.into()),
            None => Ok(store),
        }
    }
}
