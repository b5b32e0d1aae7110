//! AdaBoost.M1 over decision stumps, and RUSBoost: the same weight
//! machinery with each round's stump trained on a random undersample of the
//! majority class.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::stump::{fit_weighted_stump, DecisionStump, SortedColumns};
use super::to_signed;
use crate::cohort::{class_counts, Label};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Round errors are clamped to `[ERROR_CLAMP, 1 - ERROR_CLAMP]` before
/// computing the stump weight.
pub const ERROR_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedStump {
    pub stump: DecisionStump,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub stumps: Vec<WeightedStump>,
}

impl StumpEnsemble {
    /// `sum_t alpha_t h_t(x)`.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.stumps.iter().map(|ws| ws.alpha * ws.stump.predict_row(row)).sum()
    }
}

/// Per-round record, filled only when a trace is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    /// Weighted error on the full training set, before clamping.
    pub error: f64,
    pub clamped_error: f64,
    /// Zero for skipped rounds.
    pub alpha: f64,
    /// Round discarded because its full-set error reached 1/2.
    pub skipped: bool,
    /// `[healthy, tbi]` counts of the rows the stump was trained on.
    pub sample_class_counts: [usize; 2],
    /// Distribution after this round's update.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoostTrace {
    pub initial_weights: Vec<f64>,
    pub rounds: Vec<RoundTrace>,
}

impl BoostTrace {
    /// `prod_t 2 sqrt(eps_t (1 - eps_t))` over accepted rounds.
    pub fn error_bound(&self) -> f64 {
        self.rounds
            .iter()
            .filter(|r| !r.skipped)
            .map(|r| 2.0 * (r.clamped_error * (1.0 - r.clamped_error)).sqrt())
            .product()
    }
}

pub fn stump_weight(error: f64) -> f64 {
    let e = error.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

pub fn fit_adaboost(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    rounds: usize,
    trace: Option<&mut BoostTrace>,
) -> Result<StumpEnsemble> {
    boost(x, y, rounds, None, trace)
}

pub fn fit_rusboost(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    rounds: usize,
    rng: &mut RngStream,
    trace: Option<&mut BoostTrace>,
) -> Result<StumpEnsemble> {
    boost(x, y, rounds, Some(rng), trace)
}

fn boost(
    x: ArrayView2<'_, f64>,
    labels: &[Label],
    rounds: usize,
    mut undersample: Option<&mut RngStream>,
    mut trace: Option<&mut BoostTrace>,
) -> Result<StumpEnsemble> {
    let n = x.nrows();
    let y = to_signed(labels);
    let mut weights = vec![1.0 / n as f64; n];
    if let Some(t) = trace.as_deref_mut() {
        t.initial_weights = weights.clone();
        t.rounds.clear();
    }

    let counts = class_counts(labels);
    let minority: Label = if counts[0] <= counts[1] { 0 } else { 1 };
    let minority_rows: Vec<usize> = (0..n).filter(|&i| labels[i] == minority).collect();
    let majority_rows: Vec<usize> = (0..n).filter(|&i| labels[i] != minority).collect();

    let full_sorted = SortedColumns::new(x);
    let mut stumps = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        let (stump, sample_counts) = match undersample.as_deref_mut() {
            None => (fit_weighted_stump(x, &full_sorted, &y, &weights).0, counts),
            Some(rng) => {
                let rows = undersample_rows(&minority_rows, &majority_rows, &weights, rng)?;
                let sub = x.select(Axis(0), &rows);
                let sub_y: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                let sub_labels: Vec<Label> = rows.iter().map(|&i| labels[i]).collect();
                let sub_w = balanced_weights(&rows, &sub_labels, &weights);
                let sorted = SortedColumns::new(sub.view());
                (
                    fit_weighted_stump(sub.view(), &sorted, &sub_y, &sub_w).0,
                    class_counts(&sub_labels),
                )
            }
        };

        // error and update always use the full training set
        let predictions: Vec<f64> = x.rows().into_iter().map(|row| stump.predict_row(row)).collect();
        let total: f64 = weights.iter().sum();
        let error: f64 = predictions
            .iter()
            .zip(&y)
            .zip(&weights)
            .filter(|((p, yi), _)| p != yi)
            .map(|(_, w)| w)
            .sum::<f64>()
            / total;
        let clamped_error = error.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);

        if error >= 0.5 {
            if let Some(t) = trace.as_deref_mut() {
                t.rounds.push(RoundTrace {
                    error,
                    clamped_error,
                    alpha: 0.0,
                    skipped: true,
                    sample_class_counts: sample_counts,
                    weights: weights.clone(),
                });
            }
            if undersample.is_some() {
                // a fresh undersample may do better
                continue;
            }
            break;
        }

        let alpha = stump_weight(error);
        for ((w, p), yi) in weights.iter_mut().zip(&predictions).zip(&y) {
            *w *= (-alpha * yi * p).exp();
        }
        let z: f64 = weights.iter().sum();
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Numeric(format!("boosting weights degenerated (sum {z})")));
        }
        weights.iter_mut().for_each(|w| *w /= z);

        stumps.push(WeightedStump { stump, alpha });
        if let Some(t) = trace.as_deref_mut() {
            t.rounds.push(RoundTrace {
                error,
                clamped_error,
                alpha,
                skipped: false,
                sample_class_counts: sample_counts,
                weights: weights.clone(),
            });
        }
        if error == 0.0 {
            break;
        }
    }
    Ok(StumpEnsemble { stumps })
}

/// Boosting weights of the subsample rescaled so each class carries half the
/// mass. Majority rows were already drawn in proportion to their weight;
/// without the rescaling their weight would count twice and the subsample
/// would drift back toward the majority class.
fn balanced_weights(rows: &[usize], labels: &[Label], weights: &[f64]) -> Vec<f64> {
    let mut mass = [0.0; 2];
    for (&i, &l) in rows.iter().zip(labels) {
        mass[l as usize] += weights[i];
    }
    rows.iter()
        .zip(labels)
        .map(|(&i, &l)| {
            let m = mass[l as usize];
            if m > 0.0 {
                0.5 * weights[i] / m
            } else {
                0.0
            }
        })
        .collect()
}

/// All minority rows plus an equal number of majority rows drawn without
/// replacement with probability proportional to their boosting weight.
fn undersample_rows(
    minority: &[usize],
    majority: &[usize],
    weights: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let k = minority.len().min(majority.len());
    let picked =
        rand::seq::index::sample_weighted(rng, majority.len(), |i| weights[majority[i]].max(f64::MIN_POSITIVE), k)
            .map_err(|e| Error::Numeric(format!("undersampling failed: {e}")))?;
    let mut rows: Vec<usize> = minority.to_vec();
    rows.extend(picked.into_iter().map(|i| majority[i]));
    rows.sort_unstable();
    Ok(rows)
}
