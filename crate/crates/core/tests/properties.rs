use proptest::prelude::*;

use verislm_core::aggregator::{aggregate, combine_models, AggregationConfig, FailedCellPolicy, SentenceScoreMatrix};
use verislm_core::calibration::{fit_profile, CalibrationSettings};
use verislm_core::dataset::Label;
use verislm_core::evaluator::{histogram, sweep_f1, ScoredExample};
use verislm_core::splitter::split_response;
use verislm_core::MeanKind;

fn mean(kind: MeanKind, xs: &[f64]) -> f64 {
    aggregate(xs, &AggregationConfig::with_mean(kind)).unwrap()
}

fn labeled() -> impl Strategy<Value = Vec<ScoredExample>> {
    prop::collection::vec((0usize..3, -2.0f64..2.0), 2..40).prop_map(|rows| {
        let mut v: Vec<ScoredExample> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (l, s))| ScoredExample { id: i.to_string(), label: Label::ALL[l], final_score: s })
            .collect();
        v[0].label = Label::Correct;
        v[1].label = Label::Wrong;
        v
    })
}

proptest! {
    #[test]
    fn means_are_permutation_invariant(xs in prop::collection::vec(1e-3f64..5.0, 1..20), seed in any::<u64>()) {
        let mut shuffled = xs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        for kind in MeanKind::ALL {
            let (a, b) = (mean(kind, &xs), mean(kind, &shuffled));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn raising_one_score_never_lowers_a_mean(xs in prop::collection::vec(1e-3f64..5.0, 1..20), idx in any::<prop::sample::Index>(), bump in 0.0f64..3.0) {
        let mut ys = xs.clone();
        let i = idx.index(ys.len());
        ys[i] += bump;
        for kind in MeanKind::ALL {
            prop_assert!(mean(kind, &ys) >= mean(kind, &xs) - 1e-12, "{kind}");
        }
    }

    #[test]
    fn harmonic_mean_stays_finite_for_any_input(xs in prop::collection::vec(-3.0f64..3.0, 1..20)) {
        let h = mean(MeanKind::Harmonic, &xs);
        let g = mean(MeanKind::Geometric, &xs);
        prop_assert!(h.is_finite() && h > 0.0);
        prop_assert!(g.is_finite() && g > 0.0);
    }

    #[test]
    fn combined_scores_lie_between_model_extremes(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 1..5)) {
        let m = SentenceScoreMatrix::from_normalized(rows.clone()).unwrap();
        let combined = combine_models(&m, FailedCellPolicy::SkipModel).unwrap();
        for (j, c) in combined.iter().enumerate() {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*c >= lo - 1e-12 && *c <= hi + 1e-12);
        }
    }

    #[test]
    fn fitted_std_respects_floor(xs in prop::collection::vec(0.0f64..=1.0, 10..50)) {
        let p = fit_profile("m", &xs, &CalibrationSettings::default(), chrono::DateTime::UNIX_EPOCH).unwrap();
        prop_assert!(p.std >= 1e-6);
        prop_assert!(p.usable && p.sample_count == xs.len());
    }

    #[test]
    fn curve_values_are_bounded(examples in labeled()) {
        let r = sweep_f1(&examples, Label::Wrong).unwrap();
        for pt in &r.curve {
            prop_assert!((0.0..=1.0).contains(&pt.precision));
            prop_assert!((0.0..=1.0).contains(&pt.recall));
            prop_assert!((0.0..=1.0).contains(&pt.f1));
        }
        let max = r.curve.iter().map(|p| p.f1).fold(0.0, f64::max);
        prop_assert_eq!(r.best_f1, max);
        prop_assert!(r.curve.iter().all(|p| p.f1 < r.best_f1 || p.threshold >= r.best_threshold));
    }

    #[test]
    fn a_confident_correct_example_never_hurts(examples in labeled()) {
        let before = sweep_f1(&examples, Label::Wrong).unwrap().best_f1;
        let top = examples.iter().map(|e| e.final_score).fold(f64::NEG_INFINITY, f64::max);
        let mut more = examples.clone();
        more.push(ScoredExample { id: "extra".into(), label: Label::Correct, final_score: top + 1.0 });
        prop_assert!(sweep_f1(&more, Label::Wrong).unwrap().best_f1 >= before);
    }

    #[test]
    fn histogram_conserves_label_counts(examples in labeled(), bins in 1usize..30) {
        let h = histogram(&examples, bins).unwrap();
        for label in Label::ALL {
            let n = examples.iter().filter(|e| e.label == label).count();
            prop_assert_eq!(h.counts[&label].iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn splitter_invariants_hold_for_arbitrary_text(text in "[A-Za-z0-9 .!?,\n\"()-]{0,120}") {
        match split_response(&text) {
            Err(_) => prop_assert!(text.trim().is_empty()),
            Ok(spans) => {
                prop_assert!(!spans.is_empty());
                let mut prev_end = 0;
                for (i, s) in spans.iter().enumerate() {
                    prop_assert_eq!(s.index, i);
                    prop_assert!(s.byte_range.start >= prev_end);
                    prev_end = s.byte_range.end;
                    prop_assert_eq!(text[s.byte_range.clone()].trim(), s.text.as_str());
                    prop_assert!(!s.text.trim().is_empty());
                }
                let original: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                let covered: String = spans.iter().flat_map(|s| s.text.chars()).filter(|c| !c.is_whitespace()).collect();
                prop_assert_eq!(original, covered);
                prop_assert_eq!(split_response(&text).unwrap(), spans);
            }
        }
    }
}
