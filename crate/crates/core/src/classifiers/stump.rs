//! Depth-one trees: the classification stump used by AdaBoost / RUSBoost and
//! the regression stump used by LogitBoost.
//!
//! Both searches are exact: every feature, every midpoint between adjacent
//! distinct sorted values, and (for classification) both polarities.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Threshold of a stump that found no split; every input lies above it.
pub const NO_SPLIT_THRESHOLD: f64 = f64::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature_index: usize,
    pub threshold: f64,
    /// Output for values above the threshold; the other side gets the opposite.
    pub polarity: i8,
}

impl DecisionStump {
    /// +1 or -1.
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let p = self.polarity as f64;
        if row[self.feature_index] > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionStump {
    pub feature_index: usize,
    pub threshold: f64,
    pub left_value: f64,
    pub right_value: f64,
}

impl RegressionStump {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        if row[self.feature_index] > self.threshold {
            self.right_value
        } else {
            self.left_value
        }
    }
}

/// Per-feature row orderings, computed once per training matrix.
pub struct SortedColumns {
    order: Vec<Vec<usize>>,
}

impl SortedColumns {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        let order = x
            .axis_iter(Axis(1))
            .map(|col| {
                let mut idx: Vec<usize> = (0..col.len()).collect();
                idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                idx
            })
            .collect();
        Self { order }
    }
}

/// Threshold strictly between `lo < hi` such that `lo <= t < hi`.
fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

/// Best stump under weights `w` for labels `y` in {-1, +1}. Returns the stump
/// and its weighted error (as a fraction of the total weight).
pub fn fit_weighted_stump(
    x: ArrayView2<'_, f64>,
    sorted: &SortedColumns,
    y: &[f64],
    w: &[f64],
) -> (DecisionStump, f64) {
    let total: f64 = w.iter().sum();
    let neg_weight: f64 = y.iter().zip(w).filter(|(&yi, _)| yi < 0.0).map(|(_, &wi)| wi).sum();

    let mut best: Option<(DecisionStump, f64)> = None;
    for (j, order) in sorted.order.iter().enumerate() {
        let col = x.column(j);
        // error of polarity +1 with everything above the threshold
        let mut err_pos = neg_weight;
        for k in 1..order.len() {
            let prev = order[k - 1];
            if y[prev] > 0.0 {
                err_pos += w[prev];
            } else {
                err_pos -= w[prev];
            }
            let (lo, hi) = (col[prev], col[order[k]]);
            if lo == hi {
                continue;
            }
            let err_neg = total - err_pos;
            for (polarity, err) in [(1i8, err_pos), (-1i8, err_neg)] {
                if best.as_ref().is_none_or(|(_, e)| err < *e) {
                    best = Some((
                        DecisionStump {
                            feature_index: j,
                            threshold: split_point(lo, hi),
                            polarity,
                        },
                        err,
                    ));
                }
            }
        }
    }

    let stump = match best {
        Some((stump, _)) => stump,
        None => DecisionStump {
            feature_index: 0,
            threshold: NO_SPLIT_THRESHOLD,
            polarity: if neg_weight > total - neg_weight { -1 } else { 1 },
        },
    };
    let err = weighted_error(x, &stump, y, w) / total;
    (stump, err)
}

/// Unnormalized weighted misclassification of `stump`.
pub fn weighted_error(x: ArrayView2<'_, f64>, stump: &DecisionStump, y: &[f64], w: &[f64]) -> f64 {
    x.rows()
        .into_iter()
        .zip(y.iter().zip(w))
        .filter(|(row, (&yi, _))| stump.predict_row(*row) != yi)
        .map(|(_, (_, &wi))| wi)
        .sum()
}

/// Weighted least-squares regression stump for targets `z` and weights `w`.
pub fn fit_regression_stump(x: ArrayView2<'_, f64>, sorted: &SortedColumns, z: &[f64], w: &[f64]) -> RegressionStump {
    let total_w: f64 = w.iter().sum();
    let total_wz: f64 = w.iter().zip(z).map(|(a, b)| a * b).sum();

    // maximize S_L^2 / W_L + S_R^2 / W_R, equivalent to minimizing the weighted SSE
    let mut best: Option<(RegressionStump, f64)> = None;
    for (j, order) in sorted.order.iter().enumerate() {
        let col = x.column(j);
        let (mut wl, mut sl) = (0.0, 0.0);
        for k in 1..order.len() {
            let prev = order[k - 1];
            wl += w[prev];
            sl += w[prev] * z[prev];
            let (lo, hi) = (col[prev], col[order[k]]);
            if lo == hi {
                continue;
            }
            let (wr, sr) = (total_w - wl, total_wz - sl);
            if wl <= 0.0 || wr <= 0.0 {
                continue;
            }
            let gain = sl * sl / wl + sr * sr / wr;
            if best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((
                    RegressionStump {
                        feature_index: j,
                        threshold: split_point(lo, hi),
                        left_value: sl / wl,
                        right_value: sr / wr,
                    },
                    gain,
                ));
            }
        }
    }
    match best {
        Some((s, _)) => s,
        None => {
            let mean = if total_w > 0.0 { total_wz / total_w } else { 0.0 };
            RegressionStump {
                feature_index: 0,
                threshold: NO_SPLIT_THRESHOLD,
                left_value: mean,
                right_value: mean,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use ndarray::{array, Array2};

    /// Brute force over every feature, every candidate midpoint and polarity.
    fn brute_force_error(x: &Array2<f64>, y: &[f64], w: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..x.ncols() {
            let mut vals: Vec<f64> = x.column(j).to_vec();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let t = 0.5 * (pair[0] + pair[1]);
                for pol in [1.0, -1.0] {
                    let e: f64 = (0..x.nrows())
                        .filter(|&i| (if x[[i, j]] > t { pol } else { -pol }) != y[i])
                        .map(|i| w[i])
                        .sum();
                    best = best.min(e);
                }
            }
        }
        best / w.iter().sum::<f64>()
    }

    #[test]
    fn separable_line() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let w = [0.25; 4];
        let (s, e) = fit_weighted_stump(x.view(), &SortedColumns::new(x.view()), &y, &w);
        assert_eq!(s.threshold, 1.5);
        assert_eq!(s.polarity, 1);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = RngStream::new(21, 0);
        for _ in 0..30 {
            let n = 5 + rng.below(20);
            let x = Array2::from_shape_fn((n, 3), |_| (rng.below(6) as f64) * 0.5);
            let y: Vec<f64> = (0..n).map(|_| if rng.below(2) == 1 { 1.0 } else { -1.0 }).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.uniform() + 0.01).collect();
            let (_, e) = fit_weighted_stump(x.view(), &SortedColumns::new(x.view()), &y, &w);
            let oracle = brute_force_error(&x, &y, &w);
            if oracle.is_finite() {
                assert!((e - oracle).abs() < 1e-12, "{e} vs {oracle}");
            }
        }
    }

    #[test]
    fn constant_features_fall_back() {
        let x = array![[1.0], [1.0], [1.0]];
        let (s, e) = fit_weighted_stump(
            x.view(),
            &SortedColumns::new(x.view()),
            &[1.0, 1.0, -1.0],
            &[1.0, 1.0, 1.0],
        );
        assert_eq!(s.threshold, NO_SPLIT_THRESHOLD);
        assert_eq!(s.polarity, 1);
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn adjacent_floats_split_correctly() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = array![[a], [b]];
        let (s, e) = fit_weighted_stump(x.view(), &SortedColumns::new(x.view()), &[-1.0, 1.0], &[0.5, 0.5]);
        assert_eq!(e, 0.0);
        assert!(s.predict_row(x.row(1)) > 0.0 && s.predict_row(x.row(0)) < 0.0);
    }

    #[test]
    fn regression_stump_step() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let z = [-2.0, -2.0, 3.0, 3.0];
        let s = fit_regression_stump(x.view(), &SortedColumns::new(x.view()), &z, &[1.0; 4]);
        assert_eq!(s.threshold, 1.5);
        assert_eq!((s.left_value, s.right_value), (-2.0, 3.0));
    }
}
