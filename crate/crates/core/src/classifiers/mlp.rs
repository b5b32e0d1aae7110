//! One-hidden-layer network: tanh hidden units, sigmoid output, mean binary
//! cross-entropy, full-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cohort::Label;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// hidden x inputs
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl MlpParams {
    /// Weights uniform in `+-1/sqrt(fan_in)`, biases zero.
    pub fn init(inputs: usize, hidden: usize, rng: &mut RngStream) -> Self {
        let a1 = 1.0 / (inputs as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        let w1 = Array2::from_shape_fn((hidden, inputs), |_| rng.uniform_range(-a1, a1));
        let w2 = Array1::from_shape_fn(hidden, |_| rng.uniform_range(-a2, a2));
        Self {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: 0.0,
        }
    }

    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, inputs)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2: 0.0,
        }
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Output logit for one row.
    pub fn logit(&self, row: ArrayView1<'_, f64>) -> f64 {
        let hidden = (self.w1.dot(&row) + &self.b1).mapv(f64::tanh);
        hidden.dot(&self.w2) + self.b2
    }

    /// Network output minus one half.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.logit(row)) - 0.5
    }

    /// Parameters in the order w1 (row-major), b1, w2, b2.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend(self.w1.iter());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }

    pub fn from_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.n_params());
        let (h, d) = self.w1.dim();
        let (w1, rest) = flat.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        Self {
            w1: Array2::from_shape_vec((h, d), w1.to_vec()).expect("shape"),
            b1: Array1::from(b1.to_vec()),
            w2: Array1::from(w2.to_vec()),
            b2: rest[0],
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean cross-entropy and its exact gradient (same layout as the parameters).
pub fn loss_and_gradient(p: &MlpParams, x: ArrayView2<'_, f64>, y: &[f64]) -> (f64, MlpParams) {
    let n = x.nrows() as f64;
    let pre = x.dot(&p.w1.t()) + &p.b1;
    let hidden = pre.mapv(f64::tanh);
    let logits = hidden.dot(&p.w2) + p.b2;

    let mut loss = 0.0;
    let mut dz = Array1::<f64>::zeros(logits.len());
    for (i, &z) in logits.iter().enumerate() {
        loss += softplus(z) - y[i] * z;
        dz[i] = (sigmoid(z) - y[i]) / n;
    }
    loss /= n;

    let gw2 = hidden.t().dot(&dz);
    let gb2 = dz.sum();
    // d loss / d pre-activation
    let mut dpre = Array2::<f64>::zeros(hidden.dim());
    for ((i, k), v) in dpre.indexed_iter_mut() {
        let a = hidden[[i, k]];
        *v = dz[i] * p.w2[k] * (1.0 - a * a);
    }
    let gw1 = dpre.t().dot(&x);
    let gb1 = dpre.sum_axis(Axis(0));
    (
        loss,
        MlpParams {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
        },
    )
}

pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    hidden: usize,
    learning_rate: f64,
    epochs: usize,
    rng: &mut RngStream,
) -> Result<MlpParams> {
    let target: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let mut p = MlpParams::init(x.ncols(), hidden, rng);
    for epoch in 0..epochs {
        let (loss, g) = loss_and_gradient(&p, x, &target);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "neural net loss became non-finite at epoch {epoch}"
            )));
        }
        p.w1.scaled_add(-learning_rate, &g.w1);
        p.b1.scaled_add(-learning_rate, &g.b1);
        p.w2.scaled_add(-learning_rate, &g.w2);
        p.b2 -= learning_rate * g.b2;
    }
    Ok(p)
}
