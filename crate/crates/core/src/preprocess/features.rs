use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::pca::{fit_pca, PcaModel, DEFAULT_VARIANCE_THRESHOLD};
use super::scaler::FittedScaler;
use crate::cohort::{Cohort, Source, N_FRAMES, N_RAW_FEATURES};
use crate::error::{Error, Result};

/// Frames with the largest first-component loadings in the clinical cohort.
pub const DEFAULT_REDUCED_FRAMES: [usize; 3] = [2, 14, 28];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    Original,
    Reduced,
    Pca,
}

impl FeatureSpace {
    pub const ALL: [FeatureSpace; 3] = [FeatureSpace::Original, FeatureSpace::Reduced, FeatureSpace::Pca];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSpace::Original => "original",
            FeatureSpace::Reduced => "reduced",
            FeatureSpace::Pca => "pca",
        }
    }
}

impl fmt::Display for FeatureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "original" => Ok(FeatureSpace::Original),
            "reduced" => Ok(FeatureSpace::Reduced),
            "pca" => Ok(FeatureSpace::Pca),
            other => Err(Error::InvalidConfig(format!(
                "unknown feature space '{other}' (expected original, reduced or pca)"
            ))),
        }
    }
}

/// How the reduced representation picks its frames. The angle column is
/// always appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedSelection {
    /// 1-based frame numbers.
    Frames(Vec<usize>),
    /// The k frames with the largest |loading| on the first component.
    TopLoadings(usize),
}

impl Default for ReducedSelection {
    fn default() -> Self {
        ReducedSelection::Frames(DEFAULT_REDUCED_FRAMES.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub variance_threshold: f64,
    pub reduced: ReducedSelection,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            reduced: ReducedSelection::default(),
        }
    }
}

/// Preprocessing fitted on a training cohort and replayed on any other rows
/// with the raw 31-column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub space: FeatureSpace,
    pub scaler: FittedScaler,
    pub pca: Option<PcaModel>,
    /// Raw column indices kept by the reduced space.
    pub columns: Option<Vec<usize>>,
    pub output_names: Vec<String>,
}

impl FeaturePipeline {
    pub fn fit(train: &Cohort, space: FeatureSpace, cfg: &FeatureConfig) -> Result<Self> {
        let scaler = FittedScaler::fit(train.features.view())?;
        let needs_pca = space == FeatureSpace::Pca || matches!(cfg.reduced, ReducedSelection::TopLoadings(_));
        let pca = if needs_pca {
            let scaled = scaler.transform(train.features.view())?;
            let mut m = fit_pca(scaled.view(), cfg.variance_threshold)?;
            m.fitted_scaler = Some(scaler.clone());
            Some(m)
        } else {
            None
        };
        match space {
            FeatureSpace::Original => Ok(Self {
                space,
                scaler,
                pca: None,
                columns: None,
                output_names: train.feature_names.clone(),
            }),
            FeatureSpace::Reduced => {
                let columns = reduced_columns(train.n_features(), &cfg.reduced, pca.as_ref())?;
                let output_names = columns.iter().map(|&j| train.feature_names[j].clone()).collect();
                Ok(Self {
                    space,
                    scaler,
                    pca: None,
                    columns: Some(columns),
                    output_names,
                })
            }
            FeatureSpace::Pca => {
                let m = pca.expect("fitted above");
                let output_names = (1..=m.retained_rank).map(|i| format!("pc{i}")).collect();
                Ok(Self {
                    space,
                    scaler,
                    pca: Some(m),
                    columns: None,
                    output_names,
                })
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.output_names.len()
    }

    pub fn transform(&self, c: &Cohort) -> Result<Cohort> {
        let scaled = self.scaler.transform(c.features.view())?;
        let features = match self.space {
            FeatureSpace::Original => scaled,
            FeatureSpace::Reduced => scaled.select(Axis(1), self.columns.as_deref().unwrap_or(&[])),
            FeatureSpace::Pca => self
                .pca
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("pca pipeline without a fitted model".into()))?
                .project_retained(scaled.view())?,
        };
        Ok(Cohort {
            features,
            labels: c.labels.clone(),
            feature_names: self.output_names.clone(),
            source: Source::Derived {
                from: Box::new(c.source.clone()),
                space: self.space.to_string(),
            },
        })
    }
}

fn reduced_columns(d: usize, selection: &ReducedSelection, pca: Option<&PcaModel>) -> Result<Vec<usize>> {
    if d != N_RAW_FEATURES {
        return Err(Error::DimensionMismatch {
            expected: N_RAW_FEATURES,
            got: d,
        });
    }
    let mut columns: Vec<usize> = match selection {
        ReducedSelection::Frames(frames) => {
            if frames.is_empty() {
                return Err(Error::InvalidConfig(
                    "reduced feature set needs at least one frame".into(),
                ));
            }
            let mut cols = Vec::with_capacity(frames.len());
            for &f in frames {
                if !(1..=N_FRAMES).contains(&f) {
                    return Err(Error::InvalidConfig(format!("frame {f} outside 1..={N_FRAMES}")));
                }
                if !cols.contains(&(f - 1)) {
                    cols.push(f - 1);
                }
            }
            cols
        }
        ReducedSelection::TopLoadings(k) => {
            if *k == 0 {
                return Err(Error::InvalidConfig(
                    "reduced feature set needs at least one frame".into(),
                ));
            }
            let m = pca.ok_or_else(|| Error::InvalidConfig("top-loading selection needs a PCA model".into()))?;
            let first = m.loading_vectors.column(0);
            let mut frames: Vec<usize> = (0..N_FRAMES).collect();
            frames.sort_by(|&a, &b| first[b].abs().total_cmp(&first[a].abs()));
            frames.truncate((*k).min(N_FRAMES));
            frames.sort_unstable();
            frames
        }
    };
    columns.push(N_FRAMES);
    Ok(columns)
}

/// One-shot construction of a feature representation of `c`.
///
/// The scaler comes from `model` when supplied (so that e.g. test rows reuse
/// training statistics) and is otherwise fitted on `c` itself.
pub fn build_feature_space(
    c: &Cohort,
    kind: FeatureSpace,
    model: Option<&PcaModel>,
    reduced_frames: &[usize],
) -> Result<Cohort> {
    let scaler = match model.and_then(|m| m.fitted_scaler.clone()) {
        Some(s) => s,
        None => FittedScaler::fit(c.features.view())?,
    };
    let (features, names): (Array2<f64>, Vec<String>) = match kind {
        FeatureSpace::Original => (scaler.transform(c.features.view())?, c.feature_names.clone()),
        FeatureSpace::Reduced => {
            let cols = reduced_columns(c.n_features(), &ReducedSelection::Frames(reduced_frames.to_vec()), None)?;
            let scaled = scaler.transform(c.features.view())?;
            let names = cols.iter().map(|&j| c.feature_names[j].clone()).collect();
            (scaled.select(Axis(1), &cols), names)
        }
        FeatureSpace::Pca => {
            let m =
                model.ok_or_else(|| Error::InvalidConfig("pca feature space requires a fitted PCA model".into()))?;
            let scaled = scaler.transform(c.features.view())?;
            let z = m.project_retained(scaled.view())?;
            (z, (1..=m.retained_rank).map(|i| format!("pc{i}")).collect())
        }
    };
    Ok(Cohort {
        features,
        labels: c.labels.clone(),
        feature_names: names,
        source: Source::Derived {
            from: Box::new(c.source.clone()),
            space: kind.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::raw_feature_names;
    use crate::ingest::{generate_cohort, GeneratorConfig};

    fn cohort(n: usize) -> Cohort {
        generate_cohort(&GeneratorConfig {
            n_samples: n,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn reduced_default_is_four_columns() {
        let c = cohort(200);
        let r = build_feature_space(&c, FeatureSpace::Reduced, None, &DEFAULT_REDUCED_FRAMES).unwrap();
        assert_eq!(r.n_features(), 4);
        assert_eq!(r.feature_names, vec!["f02", "f14", "f28", "angle"]);
    }

    #[test]
    fn original_is_standardized() {
        let c = cohort(300);
        let o = build_feature_space(&c, FeatureSpace::Original, None, &[]).unwrap();
        assert_eq!(o.n_features(), 31);
        for col in o.features.columns() {
            assert!(col.mean().unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pca_on_rank_one_data() {
        let base: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let x = Array2::from_shape_fn((10, 31), |(i, j)| {
            if j == 30 {
                base[i] * 2.0
            } else {
                base[i] * (j + 1) as f64
            }
        });
        let c = Cohort::new(
            x,
            vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
            raw_feature_names(),
            Source::InMemory,
        )
        .unwrap();
        let pipe = FeaturePipeline::fit(&c, FeatureSpace::Pca, &FeatureConfig::default()).unwrap();
        assert_eq!(pipe.output_dim(), 1);
        let m = pipe.pca.as_ref().unwrap();
        let z = build_feature_space(&c, FeatureSpace::Pca, Some(m), &[]).unwrap();
        assert_eq!(z.n_features(), 1);
        assert_eq!(pipe.transform(&c).unwrap().features, z.features);
    }

    #[test]
    fn errors() {
        let c = cohort(100);
        assert!(build_feature_space(&c, FeatureSpace::Pca, None, &[]).is_err());
        assert!(build_feature_space(&c, FeatureSpace::Reduced, None, &[]).is_err());
        assert!(build_feature_space(&c, FeatureSpace::Reduced, None, &[31]).is_err());
        assert!("bogus".parse::<FeatureSpace>().is_err());
        assert_eq!("pca".parse::<FeatureSpace>().unwrap(), FeatureSpace::Pca);
    }

    #[test]
    fn top_loading_selection() {
        let c = cohort(400);
        let cfg = FeatureConfig {
            reduced: ReducedSelection::TopLoadings(5),
            ..Default::default()
        };
        let pipe = FeaturePipeline::fit(&c, FeatureSpace::Reduced, &cfg).unwrap();
        let cols = pipe.columns.clone().unwrap();
        assert_eq!(cols.len(), 6);
        assert_eq!(*cols.last().unwrap(), N_FRAMES);
        assert!(cols[..5].iter().all(|&j| j < N_FRAMES));
    }

    #[test]
    fn pipeline_uses_training_statistics_only() {
        let c = cohort(300);
        let train: Vec<usize> = (0..200).collect();
        let tr = c.subset(&train);
        let a = FeaturePipeline::fit(&tr, FeatureSpace::Pca, &FeatureConfig::default()).unwrap();
        let b = FeaturePipeline::fit(&tr.clone(), FeatureSpace::Pca, &FeatureConfig::default()).unwrap();
        assert_eq!(a, b);
        let out = a.transform(&c).unwrap();
        assert_eq!(out.n_samples(), 300);
        assert_eq!(out.n_features(), a.output_dim());
    }
}
