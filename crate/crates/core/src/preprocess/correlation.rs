use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Pearson correlation matrix of the columns of `x`.
///
/// Constant columns get zero correlations with every other column and a
/// diagonal of 1.
pub fn correlation_matrix(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, needed: 2 });
    }
    let means = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &means;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let sd: Vec<f64> = (0..d).map(|i| cov[[i, i]].max(0.0).sqrt()).collect();
    let scale = sd.iter().cloned().fold(0.0, f64::max);
    let constant: Vec<bool> = sd.iter().map(|&s| s <= 1e-12 * scale.max(1e-300)).collect();

    let mut r = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        r[[i, i]] = 1.0;
        for j in 0..i {
            let v = if constant[i] || constant[j] {
                0.0
            } else {
                (cov[[i, j]] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
            };
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    Ok(r)
}
