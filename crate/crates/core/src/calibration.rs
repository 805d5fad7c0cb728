//! Per-model score statistics and z-normalization.
//!
//! Each model reports yes-probabilities on its own scale, so raw scores are
//! standardized with the mean and population standard deviation of that
//! model's scores on a held-out calibration set before they are combined.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STD_FLOOR: f64 = 1e-6;
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    #[serde(default = "default_std_floor")]
    pub std_floor: f64,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
}

fn default_std_floor() -> f64 {
    STD_FLOOR
}
fn default_min_samples() -> usize {
    MIN_SAMPLES
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { std_floor: STD_FLOOR, min_samples: MIN_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub model_id: String,
    pub mean: f64,
    pub std: f64,
    pub sample_count: usize,
    pub updated_at: DateTime<Utc>,
    #[serde(default = "yes")]
    pub usable: bool,
}

fn yes() -> bool {
    true
}

impl CalibrationProfile {
    /// Mean 0, std 1: normalization leaves raw scores unchanged.
    pub fn identity(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            mean: 0.0,
            std: 1.0,
            sample_count: 0,
            updated_at: DateTime::UNIX_EPOCH,
            usable: true,
        }
    }

    pub fn normalize(&self, raw: f64) -> Result<f64, CalibrationError> {
        normalize(self, raw)
    }
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no calibration scores for model `{model_id}`")]
    EmptyCalibrationSet { model_id: String },
    #[error("model `{}` has {} calibration samples, {min_samples} required", profile.model_id, profile.sample_count)]
    InsufficientSamples { profile: Box<CalibrationProfile>, min_samples: usize },
    #[error("calibration score {value} for model `{model_id}` is outside [0, 1]")]
    ScoreOutOfRange { model_id: String, value: f64 },
    #[error("calibration profile for `{model_id}` is not usable")]
    UnusableProfile { model_id: String },
    #[error("no calibration profile for model `{0}`")]
    MissingProfile(String),
    #[error("calibration store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration store format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Fits mean and population standard deviation (floored at `std_floor`).
/// With fewer than `min_samples` scores the profile is still computed but
/// marked unusable and returned inside [`CalibrationError::InsufficientSamples`].
pub fn fit_profile(
    model_id: &str,
    scores: &[f64],
    settings: &CalibrationSettings,
    updated_at: DateTime<Utc>,
) -> Result<CalibrationProfile, CalibrationError> {
    if scores.is_empty() {
        return Err(CalibrationError::EmptyCalibrationSet { model_id: model_id.to_string() });
    }
    if let Some(&value) = scores.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(CalibrationError::ScoreOutOfRange { model_id: model_id.to_string(), value });
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let profile = CalibrationProfile {
        model_id: model_id.to_string(),
        mean,
        std: var.sqrt().max(settings.std_floor),
        sample_count: scores.len(),
        updated_at: updated_at.trunc_subsecs(0),
        usable: scores.len() >= settings.min_samples,
    };
    if profile.usable {
        Ok(profile)
    } else {
        Err(CalibrationError::InsufficientSamples { profile: Box::new(profile), min_samples: settings.min_samples })
    }
}

/// `(raw - mean) / std`.
pub fn normalize(profile: &CalibrationProfile, raw: f64) -> Result<f64, CalibrationError> {
    if !profile.usable {
        return Err(CalibrationError::UnusableProfile { model_id: profile.model_id.clone() });
    }
    Ok((raw - profile.mean) / profile.std)
}

/// The persisted set of profiles, one per model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    pub profiles: Vec<CalibrationProfile>,
}

impl CalibrationStore {
    pub fn get(&self, model_id: &str) -> Option<&CalibrationProfile> {
        self.profiles.iter().find(|p| p.model_id == model_id)
    }

    /// Inserts or replaces the profile for its model.
    pub fn upsert(&mut self, profile: CalibrationProfile) {
        match self.profiles.iter_mut().find(|p| p.model_id == profile.model_id) {
            Some(slot) => *slot = profile,
            None => self.profiles.push(profile),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profiles serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, CalibrationError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Writes to a sibling temp file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<(), CalibrationError> {
        let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{file_name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(scores: &[f64]) -> Result<CalibrationProfile, CalibrationError> {
        let settings = CalibrationSettings { min_samples: 1, ..Default::default() };
        fit_profile("m", scores, &settings, Utc::now())
    }

    #[test]
    fn two_point_population_std() {
        let p = fit(&[0.0, 1.0]).unwrap();
        assert_eq!(p.mean, 0.5);
        assert_eq!(p.std, 0.5);
        assert_eq!(p.sample_count, 2);
    }

    #[test]
    fn zero_variance_is_floored() {
        let p = fit(&[0.7, 0.7, 0.7]).unwrap();
        assert!((p.mean - 0.7).abs() < 1e-15);
        assert_eq!(p.std, STD_FLOOR);
    }

    #[test]
    fn empty_and_short_sets() {
        assert!(matches!(fit(&[]), Err(CalibrationError::EmptyCalibrationSet { .. })));
        let err = fit_profile("m", &[0.1, 0.2], &CalibrationSettings::default(), Utc::now()).unwrap_err();
        match err {
            CalibrationError::InsufficientSamples { profile, min_samples } => {
                assert_eq!(min_samples, MIN_SAMPLES);
                assert!(!profile.usable);
                assert!(matches!(profile.normalize(0.1), Err(CalibrationError::UnusableProfile { .. })));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(fit(&[1.2]), Err(CalibrationError::ScoreOutOfRange { .. })));
    }

    #[test]
    fn normalize_examples() {
        let mut p = CalibrationProfile::identity("m");
        p.mean = 0.5;
        p.std = 0.5;
        assert_eq!(normalize(&p, 0.5).unwrap(), 0.0);
        assert_eq!(normalize(&p, 1.0).unwrap(), 1.0);
        p.mean = 0.8;
        p.std = 0.1;
        assert!((normalize(&p, 0.6).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn store_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibration.json");
        let mut store = CalibrationStore::default();
        store.upsert(fit(&[0.1, 0.35, 0.9]).unwrap());
        store.upsert(CalibrationProfile::identity("other"));
        store.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let back = CalibrationStore::load(&path).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.to_json(), text);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn upsert_replaces_by_model() {
        let mut store = CalibrationStore::default();
        store.upsert(CalibrationProfile::identity("m"));
        store.upsert(fit(&[0.2, 0.4]).unwrap());
        assert_eq!(store.profiles.len(), 1);
        assert!((store.get("m").unwrap().mean - 0.3).abs() < 1e-15);
    }
}
