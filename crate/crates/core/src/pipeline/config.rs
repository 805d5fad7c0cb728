use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Mode, PipelineError};
use crate::aggregator::AggregationConfig;
use crate::calibration::CalibrationSettings;
use crate::exec::Strategy;
use crate::scorer::{check_unique_ids, ModelBackendRef, DEFAULT_TEMPLATE_ID};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

/// Declarative pipeline configuration, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub backends: Vec<ModelBackendRef>,
    #[serde(default)]
    pub aggregation: AggregationConfig,
    /// Where fitted profiles are persisted; relative paths resolve against
    /// the config file's directory. `None` keeps calibration in memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_store: Option<PathBuf>,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_template_id")]
    pub template_id: String,
    /// Extra prompt templates by id; each must contain `{question}`,
    /// `{context}` and `{claim}`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub templates: BTreeMap<String, String>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub execution: Strategy,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_template_id() -> String {
    DEFAULT_TEMPLATE_ID.to_string()
}
fn default_bins() -> usize {
    DEFAULT_HISTOGRAM_BINS
}

impl PipelineConfig {
    pub fn new(backends: Vec<ModelBackendRef>) -> Self {
        Self {
            backends,
            aggregation: AggregationConfig::default(),
            calibration_store: None,
            calibration: CalibrationSettings::default(),
            mode: Mode::Split,
            threshold: DEFAULT_THRESHOLD,
            template_id: default_template_id(),
            templates: BTreeMap::new(),
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            execution: Strategy::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let config: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file, resolves the store path and applies per-backend
    /// environment overrides.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let (Some(store), Some(dir)) = (&config.calibration_store, path.parent()) {
            if store.is_relative() {
                config.calibration_store = Some(dir.join(store));
            }
        }
        for b in &mut config.backends {
            b.apply_env();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.backends.is_empty() {
            return bad("at least one backend is required".into());
        }
        check_unique_ids(&self.backends).map_err(|e| PipelineError::Config(e.to_string()))?;
        for b in &self.backends {
            b.validate().map_err(PipelineError::Config)?;
        }
        if self.aggregation.epsilon.is_nan() || self.aggregation.epsilon <= 0.0 {
            return bad(format!("aggregation.epsilon must be positive, got {}", self.aggregation.epsilon));
        }
        if self.calibration.std_floor.is_nan() || self.calibration.std_floor <= 0.0 {
            return bad("calibration.std_floor must be positive".into());
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be at least 1".into());
        }
        Ok(())
    }
}
