//! Threshold sweeps and score distributions over labeled response scores.
//!
//! A response is predicted "correct" when its score is strictly above the
//! threshold. Each comparison pits the `correct` records against one negative
//! label; records with the third label are left out.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;

pub const DEFAULT_RECALL_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub id: String,
    pub label: Label,
    pub final_score: f64,
}

/// Which negative label the `correct` records are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Wrong,
    Partial,
}

impl Comparison {
    pub fn negative_label(self) -> Label {
        match self {
            Comparison::Wrong => Label::Wrong,
            Comparison::Partial => Label::Partial,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.negative_label().as_str())
    }
}

impl FromStr for Comparison {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wrong" => Ok(Comparison::Wrong),
            "partial" => Ok(Comparison::Partial),
            _ => Err(format!("expected wrong|partial, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("degenerate evaluation set: {0}")]
    DegenerateEvaluationSet(String),
    #[error("no threshold reaches recall {floor}")]
    NoThresholdMeetsFloor { floor: f64 },
    #[error("recall floor must lie in (0, 1], got {0}")]
    InvalidFloor(f64),
    #[error("histogram needs at least one bin")]
    InvalidBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_threshold: f64,
    pub best_f1: f64,
    pub precision_at_best: f64,
    pub recall_at_best: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionAtRecall {
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Precision, recall and F1 from confusion counts. Empty denominators give 0.
pub fn prf(tp: usize, fp: usize, positives: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if positives == 0 { 0.0 } else { tp as f64 / positives as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// (score, is_positive) pairs for one comparison.
fn comparison_scores(examples: &[ScoredExample], negative: Label) -> Result<Vec<(f64, bool)>, EvalError> {
    if negative == Label::Correct {
        return Err(EvalError::DegenerateEvaluationSet("negative label cannot be `correct`".into()));
    }
    let pairs: Vec<(f64, bool)> = examples
        .iter()
        .filter(|e| e.label == Label::Correct || e.label == negative)
        .map(|e| (e.final_score, e.label == Label::Correct))
        .collect();
    if let Some((s, _)) = pairs.iter().find(|(s, _)| !s.is_finite()) {
        return Err(EvalError::DegenerateEvaluationSet(format!("non-finite score {s}")));
    }
    let positives = pairs.iter().filter(|(_, p)| *p).count();
    if positives == 0 || positives == pairs.len() {
        return Err(EvalError::DegenerateEvaluationSet(format!(
            "need at least one `correct` and one `{negative}` record"
        )));
    }
    Ok(pairs)
}

/// Candidate thresholds: one sentinel below the minimum, the midpoints of
/// consecutive distinct scores, one sentinel above the maximum.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (Some(&lo), Some(&hi)) = (distinct.first(), distinct.last()) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(lo - (1.0 + lo.abs()));
    out.extend(distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(hi + (1.0 + hi.abs()));
    out
}

/// Sweeps every candidate threshold in ascending order.
fn curve(pairs: &[(f64, bool)]) -> Vec<CurvePoint> {
    let positives = pairs.iter().filter(|(_, p)| *p).count();
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let thresholds = candidate_thresholds(&sorted.iter().map(|(s, _)| *s).collect::<Vec<_>>());

    // Everything at or above the current distinct score is predicted positive;
    // walking upward removes one score group per step.
    let mut tp = positives;
    let mut fp = pairs.len() - positives;
    let mut idx = 0;
    let mut out = Vec::with_capacity(thresholds.len());
    for (k, &t) in thresholds.iter().enumerate() {
        if k > 0 {
            let group = sorted[idx].0;
            while idx < sorted.len() && sorted[idx].0 == group {
                if sorted[idx].1 {
                    tp -= 1;
                } else {
                    fp -= 1;
                }
                idx += 1;
            }
        }
        let (precision, recall, f1) = prf(tp, fp, positives);
        out.push(CurvePoint { threshold: t, precision, recall, f1 });
    }
    out
}

pub fn sweep_f1(examples: &[ScoredExample], negative: Label) -> Result<SweepResult, EvalError> {
    let pairs = comparison_scores(examples, negative)?;
    let curve = curve(&pairs);
    let mut best = curve[0];
    for point in &curve[1..] {
        if point.f1 > best.f1 {
            best = *point;
        }
    }
    Ok(SweepResult {
        best_threshold: best.threshold,
        best_f1: best.f1,
        precision_at_best: best.precision,
        recall_at_best: best.recall,
        curve,
    })
}

/// Highest precision among thresholds whose recall is at least `floor`;
/// ties go to higher recall, then to the lower threshold.
pub fn best_precision_with_recall_floor(
    examples: &[ScoredExample],
    negative: Label,
    floor: f64,
) -> Result<PrecisionAtRecall, EvalError> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(EvalError::InvalidFloor(floor));
    }
    let pairs = comparison_scores(examples, negative)?;
    let mut best: Option<CurvePoint> = None;
    for point in curve(&pairs).into_iter().filter(|p| p.recall >= floor) {
        let better = match best {
            None => true,
            Some(b) => point.precision > b.precision || (point.precision == b.precision && point.recall > b.recall),
        };
        if better {
            best = Some(point);
        }
    }
    best.map(|b| PrecisionAtRecall { precision: b.precision, recall: b.recall, threshold: b.threshold })
        .ok_or(EvalError::NoThresholdMeetsFloor { floor })
}

/// Equal-width bins over the observed score range, counted per label.
/// Bins are `[lo, hi)` except the last, which is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: BTreeMap<Label, Vec<usize>>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }
}

pub fn histogram(examples: &[ScoredExample], bins: usize) -> Result<Histogram, EvalError> {
    if bins == 0 {
        return Err(EvalError::InvalidBins);
    }
    let lo = examples.iter().map(|e| e.final_score).fold(f64::INFINITY, f64::min);
    let hi = examples.iter().map(|e| e.final_score).fold(f64::NEG_INFINITY, f64::max);
    if examples.is_empty() {
        return Ok(Histogram { edges: Vec::new(), counts: Label::ALL.into_iter().map(|l| (l, Vec::new())).collect() });
    }
    // A zero-width range collapses to a single bin.
    let bins = if hi > lo { bins } else { 1 };
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    edges.push(hi);
    let mut counts: BTreeMap<Label, Vec<usize>> = Label::ALL.into_iter().map(|l| (l, vec![0; bins])).collect();
    for e in examples {
        let inner = &edges[1..bins];
        let bin = inner.partition_point(|&edge| edge <= e.final_score);
        counts.get_mut(&e.label).expect("all labels present")[bin] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// `threshold,precision,recall,f1` rows.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "precision", "recall", "f1"])?;
    for p in curve {
        w.serialize((p.threshold, p.precision, p.recall, p.f1))?;
    }
    w.flush()?;
    Ok(())
}

/// `label,bin_lo,bin_hi,count` rows.
pub fn write_histogram_csv<W: Write>(hist: &Histogram, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "bin_lo", "bin_hi", "count"])?;
    for (label, counts) in &hist.counts {
        for (k, count) in counts.iter().enumerate() {
            w.serialize((label.as_str(), hist.edges[k], hist.edges[k + 1], count))?;
        }
    }
    w.flush()?;
    Ok(())
}
