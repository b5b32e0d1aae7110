//! Soft-margin kernel SVM trained by sequential minimal optimization.
//!
//! The working pair is chosen with second-order information (the maximal
//! violating `i`, then the `j` giving the largest guaranteed decrease of the
//! dual), and the solver stops once the KKT gap `m(a) - M(a)` drops below the
//! tolerance.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{to_signed, Kernel};
use crate::cohort::Label;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
/// One pass is `n` pair updates.
pub const DEFAULT_MAX_PASSES: usize = 10_000;

const TAU: f64 = 1e-12;

impl Kernel {
    /// Same kernel with `gamma` fixed, defaulting to `1 / d`.
    pub fn resolved(self, d: usize) -> Kernel {
        let default = 1.0 / d.max(1) as f64;
        match self {
            Kernel::Linear => Kernel::Linear,
            Kernel::Polynomial { degree, gamma } => Kernel::Polynomial {
                degree,
                gamma: Some(gamma.unwrap_or(default)),
            },
            Kernel::Rbf { gamma } => Kernel::Rbf {
                gamma: Some(gamma.unwrap_or(default)),
            },
        }
    }

    pub fn eval(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        let default = || 1.0 / a.len().max(1) as f64;
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Polynomial { degree, gamma } => {
                (gamma.unwrap_or_else(default) * a.dot(&b) + 1.0).powi(degree as i32)
            }
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                (-gamma.unwrap_or_else(default) * d2).exp()
            }
        }
    }
}

/// Gram matrix of the rows of `x`.
pub fn kernel_matrix(kernel: &Kernel, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Pair updates performed.
    pub iterations: usize,
}

/// `m(a) - M(a)`: the largest KKT violation of `alpha`. Zero or negative at
/// an exact optimum.
pub fn max_kkt_violation(k: ArrayView2<'_, f64>, y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * k[[i, j]] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let (up, low) = extremes(y, alpha, c, &grad);
    up + low
}

/// `(max_{I_up} -y G, max_{I_low} y G)`.
fn extremes(y: &[f64], alpha: &[f64], c: f64, grad: &[f64]) -> (f64, f64) {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmax2 = f64::NEG_INFINITY;
    for t in 0..y.len() {
        if in_up(y[t], alpha[t], c) {
            gmax = gmax.max(-y[t] * grad[t]);
        }
        if in_low(y[t], alpha[t], c) {
            gmax2 = gmax2.max(y[t] * grad[t]);
        }
    }
    (gmax, gmax2)
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y < 0.0 && a < c) || (y > 0.0 && a > 0.0)
}

/// Solves `min 1/2 a'Qa - e'a` subject to `0 <= a <= c`, `y'a = 0`, where
/// `Q_ij = y_i y_j K_ij`. Fails with `NotConverged` after `max_passes * n`
/// pair updates.
pub fn solve_smo(k: ArrayView2<'_, f64>, y: &[f64], c: f64, tolerance: f64, max_passes: usize) -> Result<SmoSolution> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let budget = max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;

    loop {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(y[t], alpha[t], c) && -y[t] * grad[t] >= gmax && (i_sel.is_none() || -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        // j: best second-order decrease among I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(y[t], alpha[t], c) {
                    continue;
                }
                let yg = y[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    let a = k[[i, i]] + k[[t, t]] - 2.0 * k[[i, t]];
                    let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                    if obj < obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if gmax + gmax2 < tolerance {
            break;
        }
        if iterations >= budget {
            return Err(Error::NotConverged {
                what: "SMO",
                iterations: iterations / n.max(1),
                unit: "passes",
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = k[[i, j]];
        let quad = (k[[i, i]] + k[[j, j]] - 2.0 * kij).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[[t, i]] * di + y[j] * k[[t, j]] * dj);
        }
    }

    Ok(SmoSolution {
        bias: -rho(y, &alpha, c, &grad),
        alpha,
        iterations,
    })
}

/// Offset from the free multipliers, or the midpoint of the feasible
/// interval when none are free.
fn rho(y: &[f64], alpha: &[f64], c: f64, grad: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Kernel with gamma resolved.
    pub kernel: Kernel,
    pub c: f64,
    /// Rows with a nonzero multiplier.
    pub support_vectors: Array2<f64>,
    pub alphas: Vec<f64>,
    /// `+1` / `-1` label of each support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
}

impl SvmParams {
    /// `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.support_vectors
            .rows()
            .into_iter()
            .zip(self.alphas.iter().zip(&self.labels))
            .map(|(sv, (a, y))| a * y * self.kernel.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }
}

pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    c: f64,
    kernel: Kernel,
    tolerance: f64,
    max_passes: usize,
) -> Result<SvmParams> {
    let kernel = kernel.resolved(x.ncols());
    let ys = to_signed(y);
    let k = kernel_matrix(&kernel, x);
    let sol = solve_smo(k.view(), &ys, c, tolerance, max_passes)?;
    let keep: Vec<usize> = (0..ys.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmParams {
        kernel,
        c,
        support_vectors: x.select(Axis(0), &keep),
        alphas: keep.iter().map(|&i| sol.alpha[i]).collect(),
        labels: keep.iter().map(|&i| ys[i]).collect(),
        bias: sol.bias,
    })
}

/// Decision values for the training rows straight from the Gram matrix.
pub fn training_scores(k: ArrayView2<'_, f64>, y: &[f64], sol: &SmoSolution) -> Array1<f64> {
    let coef: Array1<f64> = sol.alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
    k.dot(&coef) + sol.bias
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, ClassifierSpec, ModelParams};
    use crate::rng::RngStream;
    use ndarray::array;

    fn xor() -> (Array2<f64>, Vec<Label>) {
        (array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]], vec![0, 0, 1, 1])
    }

    #[test]
    fn rbf_separates_xor() {
        let (x, y) = xor();
        let spec = ClassifierSpec::Svm {
            c: 10.0,
            kernel: Kernel::Rbf { gamma: Some(1.0) },
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
        };
        let m = train(&spec, x.view(), &y, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
        let ModelParams::Svm(p) = &m.params else { panic!() };
        let balance: f64 = p.alphas.iter().zip(&p.labels).map(|(a, l)| a * l).sum();
        assert!(balance.abs() < 1e-6);
    }

    #[test]
    fn xor_matches_closed_form() {
        // by symmetry every multiplier is equal and the bias is zero:
        // a = 1 / (1 - 2 e^-1 + e^-2) for gamma = 1
        let (x, y) = xor();
        let k = kernel_matrix(&Kernel::Rbf { gamma: Some(1.0) }, x.view());
        let ys = to_signed(&y);
        let sol = solve_smo(k.view(), &ys, 10.0, 1e-9, DEFAULT_MAX_PASSES).unwrap();
        let e = (-1f64).exp();
        let expected = 1.0 / (1.0 - 2.0 * e + e * e);
        for a in &sol.alpha {
            assert!((a - expected).abs() < 1e-6, "{a} vs {expected}");
        }
        assert!(sol.bias.abs() < 1e-6);
    }

    #[test]
    fn random_problems_are_feasible() {
        let mut rng = RngStream::new(31, 0);
        for trial in 0..20 {
            let x = Array2::from_shape_fn((20, 3), |_| rng.normal(0.0, 1.0));
            let mut y: Vec<f64> = (0..20)
                .map(|i| {
                    if x[[i, 0]] + rng.normal(0.0, 0.8) > 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            y[0] = 1.0;
            y[1] = -1.0;
            let kernel = [
                Kernel::Linear,
                Kernel::Rbf { gamma: None },
                Kernel::Polynomial { degree: 3, gamma: None },
            ][trial % 3]
                .resolved(3);
            let k = kernel_matrix(&kernel, x.view());
            let c = 1.0;
            let sol = solve_smo(k.view(), &y, c, DEFAULT_TOLERANCE, DEFAULT_MAX_PASSES).unwrap();
            assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(balance.abs() <= 1e-6, "{balance}");
            assert!(max_kkt_violation(k.view(), &y, &sol.alpha, c) <= 2.0 * DEFAULT_TOLERANCE);

            // free support vectors sit on the margin
            let f = training_scores(k.view(), &y, &sol);
            for i in 0..20 {
                if sol.alpha[i] > 1e-8 && sol.alpha[i] < c - 1e-8 {
                    assert!((y[i] * f[i] - 1.0).abs() < 1e-2, "trial {trial}: {}", y[i] * f[i]);
                }
            }
        }
    }

    #[test]
    fn pass_budget_reports_non_convergence() {
        let mut rng = RngStream::new(8, 0);
        let x = Array2::from_shape_fn((30, 2), |_| rng.normal(0.0, 1.0));
        let y: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let k = kernel_matrix(&Kernel::Rbf { gamma: Some(0.5) }, x.view());
        let err = solve_smo(k.view(), &y, 100.0, 1e-12, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::NotConverged {
                what: "SMO",
                unit: "passes",
                ..
            }
        ));
    }

    #[test]
    fn linear_separable_margin() {
        let x = array![[-2.0], [-1.0], [1.0], [2.0]];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let k = kernel_matrix(&Kernel::Linear, x.view());
        let sol = solve_smo(k.view(), &y, 100.0, 1e-9, DEFAULT_MAX_PASSES).unwrap();
        // hard margin: w = 1, b = 0, support vectors at -1 and 1 with alpha 1/2
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9 && (sol.alpha[2] - 0.5).abs() < 1e-9);
        assert!(sol.alpha[0].abs() < 1e-12 && sol.alpha[3].abs() < 1e-12);
        assert!(sol.bias.abs() < 1e-9);
    }
}
