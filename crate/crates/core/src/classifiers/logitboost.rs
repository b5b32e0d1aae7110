//! Two-class LogitBoost: Newton steps on the binomial log-likelihood of an
//! additive model built from weighted least-squares regression stumps.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::stump::{fit_regression_stump, RegressionStump, SortedColumns};
use crate::cohort::Label;
use crate::error::{Error, Result};

pub const WEIGHT_FLOOR: f64 = 1e-5;
pub const RESPONSE_CLIP: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModel {
    /// Each term contributes half its stump output to F(x).
    pub terms: Vec<RegressionStump>,
}

impl AdditiveModel {
    /// F(x); the class-1 probability is `1 / (1 + exp(-2 F))`.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.terms.iter().map(|t| 0.5 * t.predict_row(row)).sum()
    }
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[Label], rounds: usize) -> Result<AdditiveModel> {
    let n = x.nrows();
    let sorted = SortedColumns::new(x);
    let target: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let mut f = vec![0.0f64; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut terms = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        for i in 0..n {
            let p = 1.0 / (1.0 + (-2.0 * f[i]).exp());
            let pq = p * (1.0 - p);
            let denom = pq.max(WEIGHT_FLOOR);
            w[i] = denom;
            z[i] = ((target[i] - p) / denom).clamp(-RESPONSE_CLIP, RESPONSE_CLIP);
        }
        let stump = fit_regression_stump(x, &sorted, &z, &w);
        for (fi, row) in f.iter_mut().zip(x.rows()) {
            *fi += 0.5 * stump.predict_row(row);
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("LogitBoost scores became non-finite".into()));
        }
        terms.push(stump);
    }
    Ok(AdditiveModel { terms })
}
