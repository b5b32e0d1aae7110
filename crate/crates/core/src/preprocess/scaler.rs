use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::error::{Error, Result};

/// Columns whose sample deviation falls below this are treated as constant.
pub const CONSTANT_COLUMN_EPS: f64 = 1e-12;

/// Per-column z-score parameters fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub means: Vec<f64>,
    /// Sample deviations (denominator N - 1); 1 for constant columns.
    pub deviations: Vec<f64>,
    pub constant_mask: Vec<bool>,
}

impl FittedScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::TooFewSamples { got: n, needed: 2 });
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut deviations = Vec::with_capacity(x.ncols());
        let mut constant_mask = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            means.push(mean);
            if sd < CONSTANT_COLUMN_EPS {
                deviations.push(1.0);
                constant_mask.push(true);
            } else {
                deviations.push(sd);
                constant_mask.push(false);
            }
        }
        Ok(Self {
            means,
            deviations,
            constant_mask,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dim(x.ncols())?;
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.deviations[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dim(z.ncols())?;
        let mut out = z.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.deviations[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

pub fn fit_scaler(c: &Cohort) -> Result<FittedScaler> {
    FittedScaler::fit(c.features.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use ndarray::array;

    #[test]
    fn two_point_column() {
        let x = array![[0.0], [2.0]];
        let s = FittedScaler::fit(x.view()).unwrap();
        assert_eq!(s.means, vec![1.0]);
        assert!((s.deviations[0] - 2f64.sqrt()).abs() < 1e-15);
        let z = s.transform(x.view()).unwrap();
        assert!((z[[0, 0]] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((z[[1, 0]] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn constant_column() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]];
        let s = FittedScaler::fit(x.view()).unwrap();
        assert_eq!(s.constant_mask, vec![true, false]);
        assert_eq!(s.deviations[0], 1.0);
        let z = s.transform(x.view()).unwrap();
        assert_eq!(z.column(0).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn needs_two_rows() {
        assert!(matches!(
            FittedScaler::fit(array![[1.0, 2.0]].view()),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn identity_parameters() {
        let s = FittedScaler {
            means: vec![0.0, 0.0],
            deviations: vec![1.0, 1.0],
            constant_mask: vec![false, false],
        };
        let x = array![[1.5, -2.0], [3.0, 4.0]];
        assert_eq!(s.transform(x.view()).unwrap(), x);
        assert!(matches!(
            s.transform(array![[1.0]].view()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn hand_computed_2x2() {
        // columns: [1, 3] -> mean 2, sd sqrt(2); [10, 20] -> mean 15, sd sqrt(50)
        let x = array![[1.0, 10.0], [3.0, 20.0]];
        let s = FittedScaler::fit(x.view()).unwrap();
        let z = s.transform(x.view()).unwrap();
        let a = 1.0 / 2f64.sqrt();
        let b = 5.0 / 50f64.sqrt();
        let expected = array![[-a, -b], [a, b]];
        for (g, e) in z.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn random_matrix_moments_and_inverse() {
        let mut rng = RngStream::new(50, 0);
        let x = Array2::from_shape_fn((50, 31), |(_, j)| rng.normal(j as f64, 1.0 + j as f64));
        let s = FittedScaler::fit(x.view()).unwrap();
        let z = s.transform(x.view()).unwrap();
        for col in z.axis_iter(Axis(1)) {
            let v = col.to_vec();
            let m = v.iter().sum::<f64>() / 50.0;
            let var = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / 49.0;
            assert!(m.abs() < 1e-12, "{m}");
            assert!((var - 1.0).abs() < 1e-10, "{var}");
        }
        let back = s.inverse_transform(z.view()).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        // refitting on standardized data is idempotent
        let s2 = FittedScaler::fit(z.view()).unwrap();
        assert!(s2.means.iter().all(|m| m.abs() < 1e-12));
        assert!(s2.deviations.iter().all(|d| (d - 1.0).abs() < 1e-10));
    }
}
