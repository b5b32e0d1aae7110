//! Gaussian naive Bayes with per-class, per-feature variances.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cohort::Label;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Class frequencies, indexed by label.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Smoothed variances (`>= epsilon`).
    pub variances: [Vec<f64>; 2],
    /// Smoothing added to every variance.
    pub epsilon: f64,
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[Label], var_smoothing: f64) -> Result<NaiveBayesParams> {
    let d = x.ncols();
    let n = x.nrows() as f64;

    // largest per-feature variance over all rows (population form)
    let max_var = x
        .axis_iter(Axis(1))
        .map(|col| {
            let m = col.sum() / n;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        })
        .fold(0.0, f64::max);
    let epsilon = var_smoothing * max_var;

    let mut priors = [0.0; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [vec![0.0; d], vec![0.0; d]];
    for class in 0..2usize {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] as usize == class).collect();
        let nc = rows.len() as f64;
        priors[class] = nc / n;
        let sub = x.select(Axis(0), &rows);
        for j in 0..d {
            let col = sub.column(j);
            let m = col.sum() / nc;
            let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nc;
            means[class][j] = m;
            variances[class][j] = v + epsilon;
        }
    }
    // a feature that is constant within a class and smoothing 0 would divide by zero
    let floor = f64::MIN_POSITIVE.sqrt();
    for v in variances.iter_mut().flatten() {
        if *v < floor {
            *v = floor;
        }
    }
    Ok(NaiveBayesParams {
        priors,
        means,
        variances,
        epsilon,
    })
}

impl NaiveBayesParams {
    pub fn log_joint(&self, row: ArrayView1<'_, f64>, class: usize) -> f64 {
        let mut ll = self.priors[class].ln();
        for (j, &x) in row.iter().enumerate() {
            let var = self.variances[class][j];
            let diff = x - self.means[class][j];
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
        }
        ll
    }

    /// Log-posterior difference `log P(1|x) - log P(0|x)`.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.log_joint(row, 1) - self.log_joint(row, 0)
    }
}
