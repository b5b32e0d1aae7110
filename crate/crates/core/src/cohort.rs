use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of temporal frames per cardiac cycle.
pub const N_FRAMES: usize = 30;
/// Frames plus the recording angle.
pub const N_RAW_FEATURES: usize = N_FRAMES + 1;

/// Binary label: 0 = Healthy, 1 = TBI.
pub type Label = u8;

pub const HEALTHY: Label = 0;
pub const TBI: Label = 1;

/// Where a cohort came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic { seed: u64 },
    File { path: String },
    Derived { from: Box<Source>, space: String },
    InMemory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    pub source: Source,
}

/// `f01..f30,angle`.
pub fn raw_feature_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=N_FRAMES).map(|i| format!("f{i:02}")).collect();
    names.push("angle".to_string());
    names
}

impl Cohort {
    /// Validates shape, finiteness and label domain.
    pub fn new(features: Array2<f64>, labels: Vec<Label>, feature_names: Vec<String>, source: Source) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: features.ncols(),
            });
        }
        check_finite(&features)?;
        check_labels(&labels)?;
        Ok(Self {
            features,
            labels,
            feature_names,
            source,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Cohort {
        Cohort {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            source: self.source.clone(),
        }
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        require_both_classes(&self.labels)
    }
}

pub fn class_counts(labels: &[Label]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for &l in labels {
        counts[l as usize] += 1;
    }
    counts
}

pub fn require_both_classes(labels: &[Label]) -> Result<()> {
    let counts = class_counts(labels);
    if counts[0] == 0 {
        return Err(Error::SingleClass { class: 1 });
    }
    if counts[1] == 0 {
        return Err(Error::SingleClass { class: 0 });
    }
    Ok(())
}

pub fn check_labels(labels: &[Label]) -> Result<()> {
    match labels.iter().position(|&l| l > 1) {
        Some(index) => Err(Error::NonBinaryLabel {
            index,
            value: labels[index].to_string(),
        }),
        None => Ok(()),
    }
}

pub fn check_finite(x: &Array2<f64>) -> Result<()> {
    for ((row, column), &value) in x.indexed_iter() {
        if !value.is_finite() {
            return Err(Error::NonFinite { row, column, value });
        }
    }
    Ok(())
}
