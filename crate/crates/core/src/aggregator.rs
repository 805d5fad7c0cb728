//! Combining normalized per-sentence, per-model scores into one response score.
//!
//! Per sentence, the available models' normalized scores are averaged. The
//! sentence scores are then reduced with the configured mean. Normalized
//! scores can be zero or negative, and the harmonic and geometric means are
//! only defined for positive inputs, so those two means first raise every
//! value to `epsilon`. This is what makes one unsupported sentence pull the
//! whole response toward zero.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::Mode;
use crate::scorer::YesProbability;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Harmonic,
    Geometric,
    Arithmetic,
    Min,
    Max,
}

impl MeanKind {
    pub const ALL: [MeanKind; 5] =
        [MeanKind::Harmonic, MeanKind::Geometric, MeanKind::Arithmetic, MeanKind::Min, MeanKind::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            MeanKind::Harmonic => "harmonic",
            MeanKind::Geometric => "geometric",
            MeanKind::Arithmetic => "arithmetic",
            MeanKind::Min => "min",
            MeanKind::Max => "max",
        }
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeanKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeanKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mean `{s}` (expected harmonic|geometric|arithmetic|min|max)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailedCellPolicy {
    /// Score the sentence with the models that did answer.
    SkipModel,
    /// Any failed cell fails the whole request.
    FailRequest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    #[serde(default = "default_mean")]
    pub mean_kind: MeanKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_policy")]
    pub on_failed_cell: FailedCellPolicy,
}

fn default_mean() -> MeanKind {
    MeanKind::Harmonic
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_policy() -> FailedCellPolicy {
    FailedCellPolicy::SkipModel
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self { mean_kind: MeanKind::Harmonic, epsilon: DEFAULT_EPSILON, on_failed_cell: FailedCellPolicy::SkipModel }
    }
}

impl AggregationConfig {
    pub fn with_mean(mean_kind: MeanKind) -> Self {
        Self { mean_kind, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("no sentence scores to aggregate")]
    EmptyScoreList,
    #[error("every model failed on sentence {sentence}")]
    AllModelsFailed { sentence: usize },
    #[error("model `{model_id}` failed on sentence {sentence}: {reason}")]
    CellFailed { model_id: String, sentence: usize, reason: String },
    #[error("score matrix is malformed: {0}")]
    Shape(String),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
}

/// One (model, sentence) score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Ok { raw: f64, normalized: f64 },
    Failed { reason: String },
}

/// Rows are models, columns are sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScoreMatrix {
    model_ids: Vec<String>,
    sentence_count: usize,
    cells: Vec<Vec<Cell>>,
}

impl SentenceScoreMatrix {
    pub fn new(model_ids: Vec<String>, cells: Vec<Vec<Cell>>) -> Result<Self, AggregationError> {
        if model_ids.is_empty() || model_ids.len() != cells.len() {
            return Err(AggregationError::Shape(format!("{} model ids for {} rows", model_ids.len(), cells.len())));
        }
        let sentence_count = cells[0].len();
        if sentence_count == 0 || cells.iter().any(|r| r.len() != sentence_count) {
            return Err(AggregationError::Shape("rows must share a non-zero sentence count".into()));
        }
        for row in &cells {
            for cell in row {
                if let Cell::Ok { raw, .. } = cell {
                    if !(0.0..=1.0).contains(raw) {
                        return Err(AggregationError::Shape(format!("raw score {raw} outside [0, 1]")));
                    }
                }
            }
        }
        Ok(Self { model_ids, sentence_count, cells })
    }

    /// Matrix of ok cells whose raw and normalized values coincide.
    pub fn from_normalized(rows: Vec<Vec<f64>>) -> Result<Self, AggregationError> {
        let ids = (0..rows.len()).map(|m| format!("m{m}")).collect();
        let cells = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| Cell::Ok { raw: v.clamp(0.0, 1.0), normalized: v }).collect())
            .collect();
        Self::new(ids, cells)
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn model_count(&self) -> usize {
        self.model_ids.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_count
    }

    pub fn cell(&self, model: usize, sentence: usize) -> &Cell {
        &self.cells[model][sentence]
    }
}

/// Per-sentence average of the available models' normalized scores.
pub fn combine_models(matrix: &SentenceScoreMatrix, policy: FailedCellPolicy) -> Result<Vec<f64>, AggregationError> {
    (0..matrix.sentence_count)
        .map(|j| {
            let mut sum = 0.0;
            let mut n = 0usize;
            for (m, row) in matrix.cells.iter().enumerate() {
                match &row[j] {
                    Cell::Ok { normalized, .. } => {
                        sum += normalized;
                        n += 1;
                    }
                    Cell::Failed { reason } if policy == FailedCellPolicy::FailRequest => {
                        return Err(AggregationError::CellFailed {
                            model_id: matrix.model_ids[m].clone(),
                            sentence: j,
                            reason: reason.clone(),
                        });
                    }
                    Cell::Failed { .. } => {}
                }
            }
            if n == 0 {
                Err(AggregationError::AllModelsFailed { sentence: j })
            } else {
                Ok(sum / n as f64)
            }
        })
        .collect()
}

/// Reduces sentence scores to one response score with `config.mean_kind`.
pub fn aggregate(per_sentence: &[f64], config: &AggregationConfig) -> Result<f64, AggregationError> {
    if per_sentence.is_empty() {
        return Err(AggregationError::EmptyScoreList);
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(AggregationError::BadEpsilon(config.epsilon));
    }
    let n = per_sentence.len() as f64;
    let eps = config.epsilon;
    let clamped = per_sentence.iter().map(|&v| v.max(eps));
    Ok(match config.mean_kind {
        MeanKind::Harmonic => n / clamped.map(|v| 1.0 / v).sum::<f64>(),
        MeanKind::Geometric => (clamped.map(f64::ln).sum::<f64>() / n).exp(),
        MeanKind::Arithmetic => per_sentence.iter().sum::<f64>() / n,
        MeanKind::Min => per_sentence.iter().copied().fold(f64::INFINITY, f64::min),
        MeanKind::Max => per_sentence.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Correct,
    Hallucinated,
}

/// `Correct` iff the score strictly exceeds the threshold.
pub fn decide(final_score: f64, threshold: f64) -> Decision {
    if final_score > threshold {
        Decision::Correct
    } else {
        Decision::Hallucinated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCell {
    pub model_id: String,
    pub raw: Option<f64>,
    pub normalized: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceBreakdown {
    pub index: usize,
    pub text: String,
    pub byte_range: Range<usize>,
    /// Cross-model average of the normalized scores.
    pub combined: f64,
    pub models: Vec<ModelCell>,
}

/// Everything computed for one verification, down to the raw cell values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub mode: Mode,
    /// `None` in whole-response mode, which applies no mean.
    pub mean_kind: Option<MeanKind>,
    pub epsilon: f64,
    pub models: Vec<String>,
    pub per_sentence: Vec<SentenceBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whole_response: Option<YesProbability>,
    pub final_score: f64,
    pub threshold: f64,
    pub decision: Decision,
}

impl VerificationReport {
    /// Recomputes the final score from the report's own breakdown.
    pub fn recompute_final_score(&self) -> Result<f64, AggregationError> {
        match (self.mean_kind, &self.whole_response) {
            (Some(mean_kind), _) => {
                let combined: Vec<f64> = self.per_sentence.iter().map(|s| s.combined).collect();
                let config = AggregationConfig { mean_kind, epsilon: self.epsilon, ..Default::default() };
                aggregate(&combined, &config)
            }
            (None, Some(whole)) => Ok(whole.value),
            (None, None) => Err(AggregationError::EmptyScoreList),
        }
    }
}
