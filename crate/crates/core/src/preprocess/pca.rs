use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::eigen::jacobi_eigen;
use super::scaler::FittedScaler;
use crate::error::{Error, Result};

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.95;

/// Principal components of a standardized matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Column means of the fitting matrix (zero up to rounding when the input
    /// was standardized); subtracted before projecting.
    pub center: Vec<f64>,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// d x d orthonormal; column i is the i-th loading vector.
    pub loading_vectors: Array2<f64>,
    pub retained_rank: usize,
    pub variance_threshold: f64,
    /// Scaler applied upstream, when the model was fitted through a pipeline.
    pub fitted_scaler: Option<FittedScaler>,
}

/// Smallest r whose leading eigenvalues reach `threshold` of the total.
/// Negative eigenvalues (rounding noise) count as zero.
pub fn retained_rank_for(eigenvalues: &[f64], threshold: f64) -> usize {
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total <= 0.0 {
        return eigenvalues.len().min(1);
    }
    let mut partial = 0.0;
    for (i, l) in eigenvalues.iter().enumerate() {
        partial += l.max(0.0);
        if partial / total >= threshold {
            return i + 1;
        }
    }
    eigenvalues.len()
}

pub fn fit_pca(x_scaled: ArrayView2<'_, f64>, threshold: f64) -> Result<PcaModel> {
    let (n, d) = x_scaled.dim();
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "variance threshold must lie in (0, 1], got {threshold}"
        )));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, needed: 2 });
    }
    if n <= d {
        log::warn!("PCA fitted on {n} samples for {d} features; the covariance is rank deficient");
    }
    if let Some(((row, column), &value)) = x_scaled.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, column, value });
    }
    let center = x_scaled.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &x_scaled - &center;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let eig = jacobi_eigen(cov.view())?;
    let eigenvalues = eig.values.to_vec();
    let retained_rank = retained_rank_for(&eigenvalues, threshold);
    Ok(PcaModel {
        center: center.to_vec(),
        eigenvalues,
        loading_vectors: eig.vectors,
        retained_rank,
        variance_threshold: threshold,
        fitted_scaler: None,
    })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `(X - center) W_r`, an N x r matrix.
    pub fn project(&self, x_scaled: ArrayView2<'_, f64>, r: usize) -> Result<Array2<f64>> {
        if r == 0 || r > self.dim() {
            return Err(Error::InvalidConfig(format!(
                "projection rank {r} outside 1..={}",
                self.dim()
            )));
        }
        if x_scaled.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x_scaled.ncols(),
            });
        }
        let center = ndarray::ArrayView1::from(&self.center[..]);
        let centered = &x_scaled - &center;
        Ok(centered.dot(&self.loading_vectors.slice(s![.., ..r])))
    }

    /// Projection onto the retained rank.
    pub fn project_retained(&self, x_scaled: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.project(x_scaled, self.retained_rank)
    }

    /// Maps component scores back to the standardized space.
    pub fn reconstruct(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let r = z.ncols();
        if r == 0 || r > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.retained_rank,
                got: r,
            });
        }
        let center = ndarray::ArrayView1::from(&self.center[..]);
        Ok(z.dot(&self.loading_vectors.slice(s![.., ..r]).t()) + center)
    }

    /// Explained-variance ratios, one per component.
    pub fn explained_variance(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if total <= 0.0 {
            let mut rho = vec![0.0; self.dim()];
            if let Some(first) = rho.first_mut() {
                *first = 1.0;
            }
            return rho;
        }
        self.eigenvalues.iter().map(|l| l.max(0.0) / total).collect()
    }

    /// Cumulative explained variance, computed from partial eigenvalue sums.
    pub fn cumulative_explained(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        let mut partial = 0.0;
        self.eigenvalues
            .iter()
            .map(|l| {
                partial += l.max(0.0);
                if total > 0.0 {
                    partial / total
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Indices of the `k` features with the largest |loading| on component 1.
    pub fn top_loading_features(&self, k: usize) -> Vec<usize> {
        let first = self.loading_vectors.column(0);
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| first[b].abs().total_cmp(&first[a].abs()));
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use ndarray::array;

    #[test]
    fn cumulative_rule() {
        let l = [4.0, 3.0, 2.0, 0.5, 0.5];
        assert_eq!(retained_rank_for(&l, 0.95), 4);
        assert_eq!(retained_rank_for(&l, 0.9), 3);
        assert_eq!(retained_rank_for(&l, 1.0), 5);
        assert_eq!(retained_rank_for(&l, 0.3), 1);
        let m = PcaModel {
            center: vec![0.0; 5],
            eigenvalues: l.to_vec(),
            loading_vectors: Array2::eye(5),
            retained_rank: 4,
            variance_threshold: 0.95,
            fitted_scaler: None,
        };
        let cum = m.cumulative_explained();
        for (c, e) in cum.iter().zip([0.4, 0.7, 0.9, 0.95, 1.0]) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_one_data() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let m = fit_pca(x.view(), 0.95).unwrap();
        assert!((m.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(m.eigenvalues[1].abs() < 1e-14);
        assert_eq!(m.retained_rank, 1);
        let rho = m.explained_variance();
        assert!((rho[0] - 1.0).abs() < 1e-14 && rho[1].abs() < 1e-14);
        let z = m.project(x.view(), 1).unwrap();
        let back = m.reconstruct(z.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_eigenvalues() {
        // Orthogonal design with equal column variances.
        let x = array![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        let m = fit_pca(x.view(), 0.95).unwrap();
        for rho in m.explained_variance() {
            assert!((rho - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_reconstruction_and_variances() {
        let mut rng = RngStream::new(8, 0);
        let x = Array2::from_shape_fn((40, 5), |(_, j)| rng.normal(0.0, 1.0 + j as f64));
        let m = fit_pca(x.view(), 0.95).unwrap();
        let z = m.project(x.view(), 5).unwrap();
        let back = m.reconstruct(z.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        for (i, col) in z.axis_iter(Axis(1)).enumerate() {
            let v = crate::stats::sample_variance(&col.to_vec());
            assert!((v - m.eigenvalues[i]).abs() < 1e-8, "{v} vs {}", m.eigenvalues[i]);
        }
    }

    #[test]
    fn projection_errors() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let m = fit_pca(x.view(), 0.95).unwrap();
        assert!(m.project(x.view(), 0).is_err());
        assert!(m.project(x.view(), 3).is_err());
        assert!(matches!(
            m.project(array![[1.0]].view(), 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(fit_pca(x.view(), 0.0).is_err());
        assert!(fit_pca(array![[f64::INFINITY, 1.0], [0.0, 0.0]].view(), 0.9).is_err());
    }

    #[test]
    fn top_loadings() {
        let m = PcaModel {
            center: vec![0.0; 4],
            eigenvalues: vec![1.0; 4],
            loading_vectors: array![
                [0.1, 0.0, 0.0, 0.0],
                [-0.7, 0.0, 0.0, 0.0],
                [0.2, 0.0, 0.0, 0.0],
                [0.68, 0.0, 0.0, 0.0]
            ],
            retained_rank: 1,
            variance_threshold: 0.95,
            fitted_scaler: None,
        };
        assert_eq!(m.top_loading_features(2), vec![1, 3]);
    }
}
