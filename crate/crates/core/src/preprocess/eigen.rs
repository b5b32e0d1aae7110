//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
/// Convergence: max off-diagonal magnitude below this fraction of the
/// Frobenius norm of the input.
pub const OFF_DIAGONAL_RTOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Sorted descending.
    pub values: Array1<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`; the entry of
    /// largest magnitude in each column is positive.
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

pub fn jacobi_eigen(a: ArrayView2<'_, f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if let Some(((row, column), &value)) = a.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, column, value });
    }

    let mut m = a.to_owned();
    // symmetrize against input rounding
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    let frobenius = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_RTOL * frobenius;
    let mut v = Array2::<f64>::eye(n);

    let mut sweeps = 0;
    loop {
        let off = max_off_diagonal(&m);
        if off <= tol || frobenius == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NotConverged {
                what: "Jacobi eigensolver",
                iterations: sweeps,
                unit: "sweeps",
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                if m[[p, q]] != 0.0 {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let lead = col
            .iter()
            .enumerate()
            .fold(
                (0usize, 0.0f64),
                |best, (k, &x)| if x.abs() > best.1 { (k, x.abs()) } else { best },
            )
            .0;
        if col[lead] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

fn max_off_diagonal(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(m[[i, j]].abs());
        }
    }
    best
}

/// One Jacobi rotation zeroing `m[p, q]`; accumulates the rotation into `v`.
fn rotate(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize) {
    let n = m.nrows();
    let apq = m[[p, q]];
    let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let (akp, akq) = (m[[k, p]], m[[k, q]]);
        m[[k, p]] = c * akp - s * akq;
        m[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[[p, k]], m[[q, k]]);
        m[[p, k]] = c * apk - s * aqk;
        m[[q, k]] = s * apk + c * aqk;
    }
    m[[p, q]] = 0.0;
    m[[q, p]] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}
