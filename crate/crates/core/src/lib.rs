//! Hallucination scoring for answers produced from retrieved context.
//!
//! A response is split into sentences, each sentence is scored by several
//! small models through the probability that their first generated token is
//! "yes", scores are z-normalized per model, averaged across models and
//! folded into one number with a configurable mean.
//!
//! ```
//! use verislm_core::aggregator::{aggregate, AggregationConfig, MeanKind};
//!
//! let s = aggregate(&[0.85, 0.65], &AggregationConfig::with_mean(MeanKind::Harmonic)).unwrap();
//! assert!((s - 0.7367).abs() < 1e-4);
//! ```

pub mod aggregator;
pub mod calibration;
pub mod dataset;
pub mod evaluator;
pub mod exec;
pub mod pipeline;
pub mod scorer;
pub mod service;
pub mod splitter;

pub use aggregator::{AggregationConfig, Decision, MeanKind, VerificationReport};
pub use calibration::{CalibrationProfile, CalibrationStore};
pub use dataset::{DatasetManifest, Label, LabeledTriple};
pub use evaluator::Comparison;
pub use exec::Strategy;
pub use pipeline::{Mode, Pipeline, PipelineConfig, PipelineError, VerificationRequest, VerifyOptions};
