//! Hyperparameter grid search.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::FoldPlan;
use crate::classifiers::{train, ClassifierSpec, Kernel, ModelKind};
use crate::cohort::{Label, TBI};
use crate::error::{Error, Result};
use crate::metrics::{compute_confusion, compute_macro_metrics, compute_metrics};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// F1 with TBI as the positive class.
    F1,
    MacroF1,
    Accuracy,
    Recall,
    Precision,
    Specificity,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::F1 => "f1",
            Objective::MacroF1 => "macro_f1",
            Objective::Accuracy => "accuracy",
            Objective::Recall => "recall",
            Objective::Precision => "precision",
            Objective::Specificity => "specificity",
        }
    }

    pub fn evaluate(&self, predicted: &[Label], actual: &[Label]) -> Result<f64> {
        let c = compute_confusion(predicted, actual, TBI)?;
        let m = compute_metrics(&c)?;
        Ok(match self {
            Objective::F1 => m.f1,
            Objective::MacroF1 => compute_macro_metrics(&c)?.f1,
            Objective::Accuracy => m.accuracy,
            Objective::Recall => m.recall,
            Objective::Precision => m.precision,
            Objective::Specificity => m.specificity,
        })
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Objective::F1,
            Objective::MacroF1,
            Objective::Accuracy,
            Objective::Recall,
            Objective::Precision,
            Objective::Specificity,
        ]
        .into_iter()
        .find(|o| o.as_str() == s.trim())
        .ok_or_else(|| Error::InvalidConfig(format!("unknown objective '{s}'")))
    }
}

/// How each grid point is scored.
#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    /// Out-of-fold predictions pooled over all folds.
    KFold(FoldPlan),
    /// Fit on `train`, score on `val` (row indices into the search data).
    Holdout { train: Vec<usize>, val: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: ClassifierSpec,
    pub best_index: usize,
    /// Objective per lattice point; `None` where training failed.
    pub scores: Vec<Option<f64>>,
    pub failures: Vec<(usize, String)>,
}

/// Default lattice for a model family.
pub fn default_grid(kind: ModelKind) -> Vec<ClassifierSpec> {
    let base = ClassifierSpec::default_for(kind);
    let with = |pairs: &[(&str, &str)]| {
        let mut s = base.clone();
        for (k, v) in pairs {
            s.set(k, v).expect("default grid values are valid");
        }
        s
    };
    match kind {
        ModelKind::GaussianNb => ["1e-9", "1e-6", "1e-3"]
            .iter()
            .map(|v| with(&[("var_smoothing", v)]))
            .collect(),
        ModelKind::AdaBoost | ModelKind::LogitBoost | ModelKind::RusBoost => {
            ["50", "100"].iter().map(|v| with(&[("rounds", v)])).collect()
        }
        ModelKind::NeuralNet => ["8", "16", "32"].iter().map(|v| with(&[("hidden", v)])).collect(),
        ModelKind::Svm => {
            let mut grid = Vec::new();
            for kernel in [
                Kernel::Linear,
                Kernel::Polynomial { degree: 3, gamma: None },
                Kernel::Rbf { gamma: None },
            ] {
                for c in [1.0, 10.0] {
                    let mut s = base.clone();
                    if let ClassifierSpec::Svm { c: sc, kernel: sk, .. } = &mut s {
                        *sc = c;
                        *sk = kernel;
                    }
                    grid.push(s);
                }
            }
            grid
        }
    }
}

/// Scores one lattice point; `rng` is the point's own stream.
fn evaluate_point(
    spec: &ClassifierSpec,
    x: ArrayView2<'_, f64>,
    y: &[Label],
    validation: &Validation,
    objective: Objective,
    rng: &RngStream,
) -> Result<f64> {
    match validation {
        Validation::Holdout { train: tr, val } => {
            let xt = x.select(Axis(0), tr);
            let yt: Vec<Label> = tr.iter().map(|&i| y[i]).collect();
            let model = train(spec, xt.view(), &yt, &mut rng.clone())?;
            let pred = model.predict(x.select(Axis(0), val).view())?;
            let actual: Vec<Label> = val.iter().map(|&i| y[i]).collect();
            objective.evaluate(&pred, &actual)
        }
        Validation::KFold(plan) => {
            if plan.assignment.len() != y.len() {
                return Err(Error::LengthMismatch {
                    left: plan.assignment.len(),
                    right: y.len(),
                });
            }
            let mut pooled = vec![0; y.len()];
            for f in 0..plan.k {
                let (tr, held) = plan.fold(f);
                let xt = x.select(Axis(0), &tr);
                let yt: Vec<Label> = tr.iter().map(|&i| y[i]).collect();
                let model = train(spec, xt.view(), &yt, &mut rng.derive(f as u64, 0))?;
                for (i, p) in held.iter().zip(model.predict(x.select(Axis(0), &held).view())?) {
                    pooled[*i] = p;
                }
            }
            objective.evaluate(&pooled, y)
        }
    }
}

/// Evaluates every point (point `i` uses stream `i` of `seed`) and returns
/// the first point with the highest objective.
pub fn grid_search(
    grid: &[ClassifierSpec],
    x: ArrayView2<'_, f64>,
    y: &[Label],
    validation: &Validation,
    objective: Objective,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("grid search needs at least one point".into()));
    }
    let outcomes: Vec<Result<f64>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, spec)| evaluate_point(spec, x, y, validation, objective, &RngStream::new(seed, i as u64)))
        .collect();

    let mut scores = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(s) => {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
                scores.push(Some(s));
            }
            Err(e) => {
                warn!("grid point {i} ({}) failed: {e}", grid[i].describe());
                failures.push((i, e.to_string()));
                scores.push(None);
            }
        }
    }
    match best {
        Some((best_index, _)) => Ok(GridResult {
            best: grid[best_index].clone(),
            best_index,
            scores,
            failures,
        }),
        None => Err(Error::AllGridPointsFailed {
            last: failures.last().map(|(_, e)| e.clone()).unwrap_or_default(),
        }),
    }
}

/// Stream used for the final fit of the selected point.
pub fn final_fit_rng(seed: u64, best_index: usize) -> RngStream {
    RngStream::new(seed, best_index as u64).derive(u64::MAX, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::split::stratified_kfold;
    use ndarray::Array2;

    fn data(seed: u64) -> (Array2<f64>, Vec<Label>) {
        let mut rng = RngStream::new(seed, 0);
        let x = Array2::from_shape_fn((90, 3), |_| rng.normal(0.0, 1.0));
        let y = (0..90)
            .map(|i| (x[[i, 0]] + rng.normal(0.0, 0.6) > -0.6) as Label)
            .collect();
        (x, y)
    }

    #[test]
    fn default_grids_are_valid() {
        for k in ModelKind::ALL {
            let g = default_grid(k);
            assert!(!g.is_empty());
            assert!(g.iter().all(|s| s.kind() == k && s.validate().is_ok()));
        }
        assert_eq!(default_grid(ModelKind::Svm).len(), 6);
    }

    #[test]
    fn singleton_grid_returns_its_point() {
        let (x, y) = data(1);
        let grid = vec![ClassifierSpec::AdaBoost { rounds: 5 }];
        let v = Validation::KFold(stratified_kfold(&y, 3, 0).unwrap());
        let r = grid_search(&grid, x.view(), &y, &v, Objective::F1, 9).unwrap();
        assert_eq!(r.best, grid[0]);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn equal_objective_prefers_first() {
        let (x, y) = data(2);
        let spec = ClassifierSpec::GaussianNb { var_smoothing: 1e-9 };
        let grid = vec![spec.clone(), spec.clone(), spec];
        let v = Validation::KFold(stratified_kfold(&y, 3, 0).unwrap());
        let r = grid_search(&grid, x.view(), &y, &v, Objective::F1, 9).unwrap();
        assert_eq!(r.best_index, 0);
        assert!(r.scores.iter().all(|s| *s == r.scores[0]));
    }

    #[test]
    fn argmax_matches_exhaustive_rerun() {
        let (x, y) = data(3);
        let grid: Vec<ClassifierSpec> = [1usize, 3, 10, 30]
            .iter()
            .map(|&rounds| ClassifierSpec::RusBoost { rounds })
            .collect();
        let v = Validation::KFold(stratified_kfold(&y, 4, 5).unwrap());
        let r = grid_search(&grid, x.view(), &y, &v, Objective::MacroF1, 11).unwrap();
        let rerun: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(i, s)| {
                evaluate_point(s, x.view(), &y, &v, Objective::MacroF1, &RngStream::new(11, i as u64)).unwrap()
            })
            .collect();
        assert_eq!(r.scores, rerun.iter().copied().map(Some).collect::<Vec<_>>());
        let max = rerun.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best_index, rerun.iter().position(|&s| s == max).unwrap());
    }

    #[test]
    fn failed_points_are_skipped() {
        let (x, y) = data(4);
        let grid = vec![
            ClassifierSpec::Svm {
                c: 1.0,
                kernel: Kernel::Rbf { gamma: None },
                tolerance: 1e-12,
                max_passes: 1,
            },
            ClassifierSpec::GaussianNb { var_smoothing: 1e-9 },
        ];
        let v = Validation::Holdout {
            train: (0..60).collect(),
            val: (60..90).collect(),
        };
        let r = grid_search(&grid, x.view(), &y, &v, Objective::Accuracy, 0).unwrap();
        assert_eq!(r.best_index, 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.scores[0], None);
        let all_bad = vec![grid[0].clone()];
        assert!(matches!(
            grid_search(&all_bad, x.view(), &y, &v, Objective::Accuracy, 0),
            Err(Error::AllGridPointsFailed { .. })
        ));
    }

    #[test]
    fn objective_names_roundtrip() {
        for o in ["f1", "macro_f1", "accuracy", "recall", "precision", "specificity"] {
            assert_eq!(o.parse::<Objective>().unwrap().as_str(), o);
        }
        assert!("auc".parse::<Objective>().is_err());
    }
}
