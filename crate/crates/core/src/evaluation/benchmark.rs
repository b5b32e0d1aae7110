//! The (feature space x model) benchmark matrix.
//!
//! For every space the preprocessing is fitted on the training split only and
//! replayed on validation and test rows. Each cell then grid-searches on the
//! pooled training and validation rows, refits the chosen point on them, and
//! is scored once on the test split.

use std::time::Instant;

use log::info;
use ndarray::{concatenate, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{default_grid, final_fit_rng, grid_search, Objective, Validation};
use super::report::{CellResult, EvaluationReport, ReportRow, REPORT_FORMAT, REPORT_SCHEMA_VERSION};
use super::split::{stratified_kfold, stratified_split, SplitPlan, DEFAULT_FOLDS, DEFAULT_FRACTIONS};
use crate::classifiers::{train, ClassifierSpec, ModelKind, TrainedModel};
use crate::cohort::{Cohort, Label, TBI};
use crate::error::{Error, Result};
use crate::metrics::{compute_confusion, compute_macro_metrics, compute_metrics};
use crate::preprocess::{FeatureConfig, FeaturePipeline, FeatureSpace};
use crate::rng::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub spaces: Vec<FeatureSpace>,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    /// Folds for grid search; below 2 selects on the validation split alone.
    pub folds: usize,
    /// Train, validation, test.
    pub fractions: [f64; 3],
    pub features: FeatureConfig,
    pub objective: Objective,
    /// Replaces the default lattice of every family that appears here.
    pub grids: Vec<ClassifierSpec>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            spaces: FeatureSpace::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            seed: 42,
            folds: DEFAULT_FOLDS,
            fractions: DEFAULT_FRACTIONS,
            features: FeatureConfig::default(),
            objective: Objective::F1,
            grids: Vec::new(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spaces.is_empty() || self.models.is_empty() {
            return Err(Error::InvalidConfig(
                "benchmark needs at least one space and one model".into(),
            ));
        }
        if self.folds < 2 && self.fractions[1] <= 0.0 {
            return Err(Error::InvalidConfig(
                "holdout selection needs a validation fraction above 0".into(),
            ));
        }
        for s in &self.grids {
            s.validate()?;
        }
        Ok(())
    }

    pub fn grid_for(&self, kind: ModelKind) -> Vec<ClassifierSpec> {
        let custom: Vec<ClassifierSpec> = self.grids.iter().filter(|s| s.kind() == kind).cloned().collect();
        if custom.is_empty() {
            default_grid(kind)
        } else {
            custom
        }
    }

    /// Seed of a cell, fixed by its position in the full matrix so that a
    /// subset run reproduces the same cells.
    pub fn cell_seed(&self, space: FeatureSpace, model: ModelKind) -> u64 {
        let s = FeatureSpace::ALL.iter().position(|&x| x == space).expect("listed");
        let m = ModelKind::ALL.iter().position(|&x| x == model).expect("listed");
        mix_seed(self.seed, 1 + (s * ModelKind::ALL.len() + m) as u64)
    }
}

/// Split parts of one feature space, all produced by a pipeline fitted on the
/// training rows.
#[derive(Debug, Clone)]
pub struct PreparedSpace {
    pub pipeline: FeaturePipeline,
    pub train: Cohort,
    pub val: Cohort,
    pub test: Cohort,
}

impl PreparedSpace {
    pub fn new(cohort: &Cohort, split: &SplitPlan, space: FeatureSpace, features: &FeatureConfig) -> Result<Self> {
        let pipeline = FeaturePipeline::fit(&cohort.subset(&split.train_idx), space, features)?;
        Ok(Self {
            train: pipeline.transform(&cohort.subset(&split.train_idx))?,
            val: pipeline.transform(&cohort.subset(&split.val_idx))?,
            test: pipeline.transform(&cohort.subset(&split.test_idx))?,
            pipeline,
        })
    }

    /// Training rows followed by validation rows.
    pub fn search_data(&self) -> (ndarray::Array2<f64>, Vec<Label>) {
        let x = concatenate(Axis(0), &[self.train.features.view(), self.val.features.view()]).expect("same width");
        let mut y = self.train.labels.clone();
        y.extend_from_slice(&self.val.labels);
        (x, y)
    }
}

/// Predictions plus mean wall-clock microseconds per row.
pub fn time_inference(model: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<(Vec<Label>, f64)> {
    let start = Instant::now();
    let pred = model.predict(x)?;
    let us = start.elapsed().as_secs_f64() * 1e6;
    Ok((pred, us / x.nrows().max(1) as f64))
}

fn run_cell(
    cfg: &BenchmarkConfig,
    prepared: &PreparedSpace,
    search: &(ndarray::Array2<f64>, Vec<Label>),
    validation: &Validation,
    model: ModelKind,
    cell_seed: u64,
) -> Result<CellResult> {
    let (x, y) = search;
    let grid = cfg.grid_for(model);
    let result = grid_search(&grid, x.view(), y, validation, cfg.objective, cell_seed)?;
    let fitted = train(
        &result.best,
        x.view(),
        y,
        &mut final_fit_rng(cell_seed, result.best_index),
    )?;
    let (pred, infer_us_per_sample) = time_inference(&fitted, prepared.test.features.view())?;
    let confusion = compute_confusion(&pred, &prepared.test.labels, TBI)?;
    Ok(CellResult {
        spec: result.best,
        confusion,
        metrics: compute_metrics(&confusion)?,
        macro_metrics: compute_macro_metrics(&confusion)?,
        grid_scores: result.scores,
        n_features: x.ncols(),
        n_train: x.nrows(),
        n_test: prepared.test.n_samples(),
        train_ms: fitted.meta.train_ms,
        infer_us_per_sample,
    })
}

pub fn run_benchmark(cohort: &Cohort, cfg: &BenchmarkConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    cohort.require_both_classes()?;
    let split = stratified_split(&cohort.labels, cfg.fractions, cfg.seed)?;
    let search_labels: Vec<Label> = split.train_val().iter().map(|&i| cohort.labels[i]).collect();
    let validation = if cfg.folds >= 2 {
        Validation::KFold(stratified_kfold(&search_labels, cfg.folds, cfg.seed)?)
    } else {
        Validation::Holdout {
            train: (0..split.train_idx.len()).collect(),
            val: (split.train_idx.len()..search_labels.len()).collect(),
        }
    };

    let mut rows = Vec::with_capacity(cfg.spaces.len() * cfg.models.len());
    for &space in &cfg.spaces {
        let prepared = PreparedSpace::new(cohort, &split, space, &cfg.features);
        let outcomes: Vec<(ModelKind, u64, std::result::Result<CellResult, String>)> = match &prepared {
            Err(e) => cfg
                .models
                .iter()
                .map(|&m| (m, cfg.cell_seed(space, m), Err(format!("preprocessing failed: {e}"))))
                .collect(),
            Ok(p) => {
                let search = p.search_data();
                cfg.models
                    .par_iter()
                    .map(|&m| {
                        let seed = cfg.cell_seed(space, m);
                        let r = run_cell(cfg, p, &search, &validation, m, seed).map_err(|e| e.to_string());
                        (m, seed, r)
                    })
                    .collect()
            }
        };
        for (model, cell_seed, outcome) in outcomes {
            match &outcome {
                Ok(c) => info!("{space}/{model}: f1={:.3} ({})", c.metrics.f1, c.spec.describe()),
                Err(e) => log::warn!("{space}/{model} failed: {e}"),
            }
            rows.push(ReportRow {
                model,
                space,
                cell_seed,
                outcome,
            });
        }
    }

    Ok(EvaluationReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_SCHEMA_VERSION,
        evaluated_on: "test_split".to_string(),
        config: cfg.clone(),
        cohort: cohort.source.clone(),
        n_samples: cohort.n_samples(),
        class_counts: cohort.class_counts(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_cohort, GeneratorConfig};

    fn small_cohort(seed: u64) -> Cohort {
        generate_cohort(&GeneratorConfig {
            n_samples: 200,
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    fn fast_config() -> BenchmarkConfig {
        BenchmarkConfig {
            folds: 3,
            grids: vec![
                ClassifierSpec::AdaBoost { rounds: 10 },
                ClassifierSpec::RusBoost { rounds: 10 },
                ClassifierSpec::LogitBoost { rounds: 10 },
                ClassifierSpec::NeuralNet {
                    hidden: 4,
                    learning_rate: 0.1,
                    epochs: 50,
                },
            ],
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn full_matrix_has_eighteen_rows_in_order() {
        let report = run_benchmark(&small_cohort(1), &fast_config()).unwrap();
        assert_eq!(report.rows.len(), 18);
        for (i, r) in report.rows.iter().enumerate() {
            assert_eq!(r.space, FeatureSpace::ALL[i / 6]);
            assert_eq!(r.model, ModelKind::ALL[i % 6]);
        }
        assert_eq!(report.failed_cells().count(), 0);
        for row in report.csv_rows() {
            let (m, mac) = row.recompute().unwrap().unwrap();
            assert_eq!(Some(m.accuracy), row.accuracy);
            assert_eq!(Some(m.recall), row.recall);
            assert_eq!(Some(mac.f1), row.f1_macro);
        }
    }

    #[test]
    fn subset_run_reproduces_cells() {
        let cohort = small_cohort(2);
        let full = run_benchmark(&cohort, &fast_config()).unwrap();
        let cfg = BenchmarkConfig {
            spaces: vec![FeatureSpace::Pca],
            models: vec![ModelKind::RusBoost],
            ..fast_config()
        };
        let one = run_benchmark(&cohort, &cfg).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert_eq!(
            one.rows[0].result().unwrap().confusion,
            full.row(FeatureSpace::Pca, ModelKind::RusBoost)
                .unwrap()
                .result()
                .unwrap()
                .confusion
        );
    }

    #[test]
    fn holdout_mode_runs() {
        let cfg = BenchmarkConfig {
            folds: 0,
            spaces: vec![FeatureSpace::Reduced],
            models: vec![ModelKind::GaussianNb, ModelKind::AdaBoost],
            ..fast_config()
        };
        let r = run_benchmark(&small_cohort(3), &cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].result().unwrap().n_features, 4);
    }

    #[test]
    fn failed_cells_are_marked() {
        let cfg = BenchmarkConfig {
            spaces: vec![FeatureSpace::Original],
            models: vec![ModelKind::Svm, ModelKind::GaussianNb],
            grids: vec![ClassifierSpec::Svm {
                c: 1.0,
                kernel: crate::classifiers::Kernel::Rbf { gamma: None },
                tolerance: 1e-15,
                max_passes: 1,
            }],
            ..fast_config()
        };
        let r = run_benchmark(&small_cohort(4), &cfg).unwrap();
        assert!(r.rows[0].outcome.is_err());
        assert!(r.rows[1].outcome.is_ok());
        let csv = r.csv_rows();
        assert_eq!(csv[0].accuracy, None);
    }
}
