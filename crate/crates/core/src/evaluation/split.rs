//! Stratified train/validation/test splits and stratified k-fold plans.

use serde::{Deserialize, Serialize};

use crate::cohort::{check_labels, class_counts, Label};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];
pub const DEFAULT_FOLDS: usize = 5;

/// Smallest class size accepted by [`stratified_split`].
pub const MIN_CLASS_FOR_SPLIT: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Train then validation indices.
    pub fn train_val(&self) -> Vec<usize> {
        let mut v = self.train_idx.clone();
        v.extend_from_slice(&self.val_idx);
        v
    }
}

/// Per-part counts for a class of size `n`: floors first, then the leftover
/// samples go to the parts with the largest fractional remainders (earlier
/// parts win ties).
pub fn allocate(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    // 0.7 * 180 evaluates to 125.99999999999999
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let remainders: Vec<f64> = quotas
        .iter()
        .zip(&counts)
        .map(|(q, &c)| (q - c as f64).max(0.0))
        .collect();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(a.cmp(&b)));
    let assigned: usize = counts.iter().sum();
    for &part in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[part] += 1;
    }
    counts
}

fn class_indices(y: &[Label], rng: &mut RngStream) -> [Vec<usize>; 2] {
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, &l) in y.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    for idx in by_class.iter_mut() {
        rng.shuffle(idx);
    }
    by_class
}

// negated comparisons so that NaN fails every check
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_fractions(fractions: &[f64; 3]) -> Result<()> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 || fractions[0] <= 0.0 || fractions[2] <= 0.0
    {
        return Err(Error::InvalidConfig(format!(
            "split fractions must be non-negative, sum to 1 and give train and test a share; got {fractions:?}"
        )));
    }
    Ok(())
}

pub fn stratified_split(y: &[Label], fractions: [f64; 3], seed: u64) -> Result<SplitPlan> {
    check_fractions(&fractions)?;
    check_labels(y)?;
    let counts = class_counts(y);
    for (class, &count) in counts.iter().enumerate() {
        if count < MIN_CLASS_FOR_SPLIT {
            return Err(Error::ClassTooSmall {
                class: class as Label,
                count,
                needed: MIN_CLASS_FOR_SPLIT,
            });
        }
    }
    let mut rng = RngStream::new(seed, 0);
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for idx in class_indices(y, &mut rng) {
        let alloc = allocate(idx.len(), &fractions);
        let mut start = 0;
        for (part, &count) in parts.iter_mut().zip(&alloc) {
            part.extend_from_slice(&idx[start..start + count]);
            start += count;
        }
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [train_idx, val_idx, test_idx] = parts;
    Ok(SplitPlan {
        train_idx,
        val_idx,
        test_idx,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold of each sample.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(training rows, held-out rows)` for fold `f`.
    pub fn fold(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignment.len()).partition(|&i| self.assignment[i] != f)
    }
}

/// Each class is shuffled, the classes are concatenated, and position `p`
/// goes to fold `p mod k`.
pub fn stratified_kfold(y: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k-fold needs k >= 2, got {k}")));
    }
    check_labels(y)?;
    let counts = class_counts(y);
    for (class, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::ClassTooSmall {
                class: class as Label,
                count,
                needed: k,
            });
        }
    }
    let mut rng = RngStream::new(seed, 1);
    let mut assignment = vec![0; y.len()];
    for (p, i) in class_indices(y, &mut rng).into_iter().flatten().enumerate() {
        assignment[i] = p % k;
    }
    Ok(FoldPlan { k, assignment, seed })
}
