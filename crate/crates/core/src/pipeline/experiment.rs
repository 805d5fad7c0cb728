use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mode, Pipeline, PipelineError, VerificationRequest, VerifyOptions};
use crate::aggregator::MeanKind;
use crate::dataset::{DatasetManifest, Label, Split};
use crate::evaluator::{
    best_precision_with_recall_floor, histogram, sweep_f1, write_curve_csv, write_histogram_csv, Comparison, Histogram,
    PrecisionAtRecall, ScoredExample, SweepResult, DEFAULT_RECALL_FLOOR,
};

/// Summary written to `metrics.json`. Contains no timestamps so repeated
/// runs over the same inputs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub comparison: Comparison,
    pub mode: Mode,
    pub mean_kind: Option<MeanKind>,
    pub models: Vec<String>,
    pub evaluated: usize,
    pub positives: usize,
    pub negatives: usize,
    pub best_threshold: f64,
    pub best_f1: f64,
    pub precision_at_best: f64,
    pub recall_at_best: f64,
    pub recall_floor: f64,
    pub precision_at_recall_floor: PrecisionAtRecall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub metrics: MetricsReport,
    pub sweep: SweepResult,
    pub histogram: Histogram,
    /// Every evaluation-split record, all labels.
    pub scores: Vec<ScoredExample>,
}

impl ExperimentOutcome {
    pub fn metrics_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.metrics).expect("metrics serialize");
        s.push('\n');
        s
    }

    /// Writes `metrics.json`, `curve.csv`, `histogram.csv` and `scores.jsonl`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metrics.json"), self.metrics_json())?;
        let csv_err = |e: csv::Error| PipelineError::Io(std::io::Error::other(e));
        write_curve_csv(&self.sweep.curve, BufWriter::new(fs::File::create(dir.join("curve.csv"))?))
            .map_err(csv_err)?;
        write_histogram_csv(&self.histogram, BufWriter::new(fs::File::create(dir.join("histogram.csv"))?))
            .map_err(csv_err)?;
        let mut lines = String::new();
        for s in &self.scores {
            lines.push_str(&serde_json::to_string(s).expect("score serializes"));
            lines.push('\n');
        }
        fs::write(dir.join("scores.jsonl"), lines)?;
        Ok(())
    }
}

impl Pipeline {
    /// Final scores for every evaluation-split record, in manifest order.
    pub fn score_evaluation_split(
        &self,
        manifest: &DatasetManifest,
        options: VerifyOptions,
    ) -> Result<Vec<ScoredExample>, PipelineError> {
        let records: Vec<_> = manifest.records_in(Split::Evaluation).collect();
        self.strategy().try_map(&records, |r| {
            let report = self.verify_with(&VerificationRequest::new(&r.question, &r.context, &r.response), options)?;
            Ok(ScoredExample { id: r.id.clone(), label: r.label, final_score: report.final_score })
        })
    }

    pub fn run_experiment(
        &self,
        manifest: &DatasetManifest,
        comparison: Comparison,
        options: VerifyOptions,
    ) -> Result<ExperimentOutcome, PipelineError> {
        let scores = self.score_evaluation_split(manifest, options)?;
        let negative = comparison.negative_label();
        let sweep = sweep_f1(&scores, negative)?;
        let at_floor = best_precision_with_recall_floor(&scores, negative, DEFAULT_RECALL_FLOOR)?;
        let hist = histogram(&scores, self.config.histogram_bins)?;
        let mode = options.mode.unwrap_or(self.config.mode);
        let metrics = MetricsReport {
            comparison,
            mode,
            mean_kind: match mode {
                Mode::Split => Some(options.mean.unwrap_or(self.config.aggregation.mean_kind)),
                Mode::WholeResponse => None,
            },
            models: match mode {
                Mode::Split => self.model_ids(),
                Mode::WholeResponse => vec![self.scorer.config(0).model_id.clone()],
            },
            evaluated: scores.len(),
            positives: scores.iter().filter(|s| s.label == Label::Correct).count(),
            negatives: scores.iter().filter(|s| s.label == negative).count(),
            best_threshold: sweep.best_threshold,
            best_f1: sweep.best_f1,
            precision_at_best: sweep.precision_at_best,
            recall_at_best: sweep.recall_at_best,
            recall_floor: DEFAULT_RECALL_FLOOR,
            precision_at_recall_floor: at_floor,
        };
        Ok(ExperimentOutcome { metrics, sweep, histogram: hist, scores })
    }
}
