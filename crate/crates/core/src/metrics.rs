//! Confusion counts and the derived screening metrics.
//!
//! A zero denominator yields a metric value of 0 and sets
//! [`MetricsRecord::degenerate`], so a fold with no predicted positives does
//! not abort a benchmark.

use serde::{Deserialize, Serialize};

use crate::cohort::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub positive_class: Label,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts seen with the other class as positive.
    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
            positive_class: 1 - self.positive_class,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Binary,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub positive_class: Label,
    pub averaging: Averaging,
    /// At least one metric hit a zero denominator and was set to 0.
    pub degenerate: bool,
}

pub fn compute_confusion(predicted: &[Label], actual: &[Label], positive_class: Label) -> Result<ConfusionCounts> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::TooFewSamples { got: 0, needed: 1 });
    }
    if positive_class > 1 {
        return Err(Error::NonBinaryLabel {
            index: 0,
            value: format!("positive_class={positive_class}"),
        });
    }
    let mut c = ConfusionCounts {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
        positive_class,
    };
    for (i, (&p, &a)) in predicted.iter().zip(actual).enumerate() {
        if p > 1 || a > 1 {
            return Err(Error::NonBinaryLabel {
                index: i,
                value: format!("predicted={p}, actual={a}"),
            });
        }
        match (p == positive_class, a == positive_class) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(precision: f64, recall: f64, degenerate: &mut bool) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        *degenerate = true;
        0.0
    }
}

/// Binary metrics with `c.positive_class` as the positive class.
pub fn compute_metrics(c: &ConfusionCounts) -> Result<MetricsRecord> {
    let total = c.total();
    if total == 0 {
        return Err(Error::TooFewSamples { got: 0, needed: 1 });
    }
    let mut degenerate = false;
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    let precision = ratio(c.tp, c.tp + c.fp, &mut degenerate);
    let recall = ratio(c.tp, c.tp + c.fn_, &mut degenerate);
    let specificity = ratio(c.tn, c.tn + c.fp, &mut degenerate);
    let f1 = f1_of(precision, recall, &mut degenerate);
    Ok(MetricsRecord {
        accuracy,
        precision,
        recall,
        specificity,
        f1,
        positive_class: c.positive_class,
        averaging: Averaging::Binary,
        degenerate,
    })
}

/// Unweighted mean of the per-class binary metrics.
pub fn compute_macro_metrics(c: &ConfusionCounts) -> Result<MetricsRecord> {
    let a = compute_metrics(c)?;
    let b = compute_metrics(&c.swapped())?;
    Ok(MetricsRecord {
        accuracy: a.accuracy,
        precision: 0.5 * (a.precision + b.precision),
        recall: 0.5 * (a.recall + b.recall),
        specificity: 0.5 * (a.specificity + b.specificity),
        f1: 0.5 * (a.f1 + b.f1),
        positive_class: c.positive_class,
        averaging: Averaging::Macro,
        degenerate: a.degenerate || b.degenerate,
    })
}

/// F1 from precision and recall alone.
pub fn f1_from_precision_recall(precision: f64, recall: f64) -> f64 {
    let mut unused = false;
    f1_of(precision, recall, &mut unused)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts {
            tp,
            tn,
            fp,
            fn_,
            positive_class: 1,
        }
    }

    #[test]
    fn one_of_each_cell() {
        let c = compute_confusion(&[1, 1, 0, 0], &[1, 0, 0, 1], 1).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 1, 1, 1));
    }

    #[test]
    fn perfect_classifier() {
        let c = compute_confusion(&[1, 0, 1], &[1, 0, 1], 1).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (2, 1, 0, 0));
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(
            compute_confusion(&[1, 0], &[1], 1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_confusion(&[1, 2], &[1, 0], 1),
            Err(Error::NonBinaryLabel { index: 1, .. })
        ));
        assert!(compute_confusion(&[], &[], 1).is_err());
    }

    #[test]
    fn confusion_matches_tally_oracle() {
        let mut rng = RngStream::new(100, 0);
        let predicted: Vec<Label> = (0..100).map(|_| rng.below(2) as Label).collect();
        let actual: Vec<Label> = (0..100).map(|_| rng.below(2) as Label).collect();
        for pos in [0u8, 1] {
            let c = compute_confusion(&predicted, &actual, pos).unwrap();
            let mut tally = [0u64; 4];
            for i in 0..100 {
                let idx = match (predicted[i] == pos, actual[i] == pos) {
                    (true, true) => 0,
                    (false, false) => 1,
                    (true, false) => 2,
                    (false, true) => 3,
                };
                tally[idx] += 1;
            }
            assert_eq!([c.tp, c.tn, c.fp, c.fn_], tally);
        }
    }

    #[test]
    fn swapping_positive_class_swaps_cells() {
        let p = [1, 1, 0, 0, 1, 0, 1];
        let a = [1, 0, 0, 1, 1, 1, 0];
        let c1 = compute_confusion(&p, &a, 1).unwrap();
        let c0 = compute_confusion(&p, &a, 0).unwrap();
        assert_eq!(c1.swapped(), c0);
    }

    #[test]
    fn perfect_metrics() {
        let m = compute_metrics(&counts(10, 10, 0, 0)).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.specificity, m.f1] {
            assert_eq!(v, 1.0);
        }
        assert!(!m.degenerate);
    }

    #[test]
    fn hand_computed_metrics() {
        let m = compute_metrics(&counts(5, 90, 3, 2)).unwrap();
        assert!((m.accuracy - 0.95).abs() < 1e-12);
        assert!((m.precision - 0.625).abs() < 1e-12);
        assert!((m.recall - 0.714_286).abs() < 1e-6);
        assert!((m.f1 - 0.666_667).abs() < 1e-6);
    }

    #[test]
    fn reported_precision_recall_pair() {
        // P = 0.874, R = 0.909 rounds to the tabulated F1 of 0.890.
        let f1 = f1_from_precision_recall(0.874, 0.909);
        assert!((f1 - 0.891).abs() < 0.0015, "{f1}");
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = compute_metrics(&counts(0, 10, 0, 0)).unwrap();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert!(m.degenerate);
        assert!(compute_metrics(&counts(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn macro_symmetric() {
        let m = compute_macro_metrics(&counts(8, 8, 2, 2)).unwrap();
        assert!((m.precision - 0.8).abs() < 1e-12);
        assert!((m.recall - 0.8).abs() < 1e-12);
    }

    #[test]
    fn macro_degenerate_class() {
        let m = compute_macro_metrics(&counts(90, 0, 10, 0)).unwrap();
        assert!((m.recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_positive_predictor() {
        let actual = [1, 0, 1, 1, 0];
        let c = compute_confusion(&[1; 5], &actual, 1).unwrap();
        let m = compute_metrics(&c).unwrap();
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.specificity, 0.0);
    }

    proptest! {
        #[test]
        fn macro_is_mean_of_two_binary_calls(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            prop_assume!(tp + tn + fp + fn_ > 0);
            let c = counts(tp, tn, fp, fn_);
            let m = compute_macro_metrics(&c).unwrap();
            let a = compute_metrics(&c).unwrap();
            let b = compute_metrics(&c.swapped()).unwrap();
            prop_assert!((m.precision - (a.precision + b.precision) / 2.0).abs() < 1e-15);
            prop_assert!((m.recall - (a.recall + b.recall) / 2.0).abs() < 1e-15);
            prop_assert!((m.f1 - (a.f1 + b.f1) / 2.0).abs() < 1e-15);
        }

        #[test]
        fn scale_free(tp in 0u64..40, tn in 0u64..40, fp in 0u64..40, fn_ in 0u64..40, k in 2u64..9) {
            prop_assume!(tp + tn + fp + fn_ > 0);
            let a = compute_metrics(&counts(tp, tn, fp, fn_)).unwrap();
            let b = compute_metrics(&counts(k * tp, k * tn, k * fp, k * fn_)).unwrap();
            for (x, y) in [(a.accuracy, b.accuracy), (a.precision, b.precision), (a.recall, b.recall),
                           (a.specificity, b.specificity), (a.f1, b.f1)] {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn f1_is_harmonic_mean(tp in 1u64..40, tn in 0u64..40, fp in 0u64..40, fn_ in 0u64..40) {
            let m = compute_metrics(&counts(tp, tn, fp, fn_)).unwrap();
            prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-15);
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
            prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
            for v in [m.accuracy, m.precision, m.recall, m.specificity, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
