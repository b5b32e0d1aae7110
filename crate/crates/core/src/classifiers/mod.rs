//! Six classifier families behind one train / predict contract.
//!
//! Every family produces a real-valued decision score; the predicted label
//! is 1 (TBI) whenever the score is `>= 0`, so exact ties go to the positive
//! class.

pub mod boosting;
pub mod logitboost;
pub mod mlp;
pub mod naive_bayes;
mod persist;
pub mod stump;
pub mod svm;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cohort::{check_labels, require_both_classes, Label};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub use persist::{deserialize_model, serialize_model, ModelDocument, MODEL_FORMAT, MODEL_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianNb,
    #[serde(rename = "adaboost")]
    AdaBoost,
    #[serde(rename = "logitboost")]
    LogitBoost,
    #[serde(rename = "rusboost")]
    RusBoost,
    NeuralNet,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::RusBoost,
        ModelKind::AdaBoost,
        ModelKind::LogitBoost,
        ModelKind::NeuralNet,
        ModelKind::Svm,
        ModelKind::GaussianNb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::AdaBoost => "adaboost",
            ModelKind::LogitBoost => "logitboost",
            ModelKind::RusBoost => "rusboost",
            ModelKind::NeuralNet => "neural_net",
            ModelKind::Svm => "svm",
        }
    }

    pub fn is_boosting(&self) -> bool {
        matches!(self, ModelKind::AdaBoost | ModelKind::LogitBoost | ModelKind::RusBoost)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `(gamma <x, x'> + 1)^degree`; `gamma = None` means `1 / d`.
    Polynomial {
        degree: u32,
        gamma: Option<f64>,
    },
    /// `exp(-gamma |x - x'|^2)`; `gamma = None` means `1 / d`.
    Rbf {
        gamma: Option<f64>,
    },
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = |g: &Option<f64>| g.map_or("1/d".to_string(), |v| v.to_string());
        match self {
            Kernel::Linear => f.write_str("linear"),
            Kernel::Polynomial { degree, gamma } => write!(f, "poly(degree={degree},gamma={})", g(gamma)),
            Kernel::Rbf { gamma } => write!(f, "rbf(gamma={})", g(gamma)),
        }
    }
}

/// Model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    GaussianNb {
        /// Added to every variance, as a fraction of the largest feature variance.
        var_smoothing: f64,
    },
    #[serde(rename = "adaboost")]
    AdaBoost { rounds: usize },
    #[serde(rename = "logitboost")]
    LogitBoost { rounds: usize },
    #[serde(rename = "rusboost")]
    RusBoost { rounds: usize },
    NeuralNet {
        hidden: usize,
        learning_rate: f64,
        epochs: usize,
    },
    Svm {
        c: f64,
        kernel: Kernel,
        tolerance: f64,
        max_passes: usize,
    },
}

impl ClassifierSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::GaussianNb => ClassifierSpec::GaussianNb { var_smoothing: 1e-9 },
            ModelKind::AdaBoost => ClassifierSpec::AdaBoost { rounds: 100 },
            ModelKind::LogitBoost => ClassifierSpec::LogitBoost { rounds: 100 },
            ModelKind::RusBoost => ClassifierSpec::RusBoost { rounds: 100 },
            ModelKind::NeuralNet => ClassifierSpec::NeuralNet {
                hidden: 16,
                learning_rate: 0.05,
                epochs: 500,
            },
            ModelKind::Svm => ClassifierSpec::Svm {
                c: 1.0,
                kernel: Kernel::Rbf { gamma: None },
                tolerance: svm::DEFAULT_TOLERANCE,
                max_passes: svm::DEFAULT_MAX_PASSES,
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::GaussianNb { .. } => ModelKind::GaussianNb,
            ClassifierSpec::AdaBoost { .. } => ModelKind::AdaBoost,
            ClassifierSpec::LogitBoost { .. } => ModelKind::LogitBoost,
            ClassifierSpec::RusBoost { .. } => ModelKind::RusBoost,
            ClassifierSpec::NeuralNet { .. } => ModelKind::NeuralNet,
            ClassifierSpec::Svm { .. } => ModelKind::Svm,
        }
    }

    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match *self {
            ClassifierSpec::GaussianNb { var_smoothing } => {
                if !(var_smoothing >= 0.0 && var_smoothing.is_finite()) {
                    return bad(format!("var_smoothing must be non-negative, got {var_smoothing}"));
                }
            }
            ClassifierSpec::AdaBoost { rounds }
            | ClassifierSpec::LogitBoost { rounds }
            | ClassifierSpec::RusBoost { rounds } => {
                if rounds == 0 {
                    return bad("boosting needs at least one round".into());
                }
            }
            ClassifierSpec::NeuralNet {
                hidden,
                learning_rate,
                epochs,
            } => {
                if hidden == 0 || epochs == 0 {
                    return bad("neural net needs hidden > 0 and epochs > 0".into());
                }
                if !(learning_rate > 0.0 && learning_rate.is_finite()) {
                    return bad(format!("learning_rate must be positive, got {learning_rate}"));
                }
            }
            ClassifierSpec::Svm {
                c,
                kernel,
                tolerance,
                max_passes,
            } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("c must be positive, got {c}"));
                }
                if !(tolerance > 0.0) || max_passes == 0 {
                    return bad("svm needs positive tolerance and max_passes".into());
                }
                match kernel {
                    Kernel::Linear => {}
                    Kernel::Polynomial { degree, gamma } => {
                        if degree == 0 {
                            return bad("polynomial degree must be positive".into());
                        }
                        if gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
                            return bad("gamma must be positive".into());
                        }
                    }
                    Kernel::Rbf { gamma } => {
                        if gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
                            return bad("gamma must be positive".into());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Sets one hyperparameter from its textual form, e.g. `("rounds", "50")`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("invalid value '{value}' for '{key}'")))
        }
        let unknown = |kind: ModelKind| Err(Error::InvalidConfig(format!("'{key}' is not a {kind} hyperparameter")));
        let kind = self.kind();
        match self {
            ClassifierSpec::GaussianNb { var_smoothing } => match key {
                "var_smoothing" => *var_smoothing = num(key, value)?,
                _ => return unknown(kind),
            },
            ClassifierSpec::AdaBoost { rounds }
            | ClassifierSpec::LogitBoost { rounds }
            | ClassifierSpec::RusBoost { rounds } => match key {
                "rounds" => *rounds = num(key, value)?,
                _ => return unknown(kind),
            },
            ClassifierSpec::NeuralNet {
                hidden,
                learning_rate,
                epochs,
            } => match key {
                "hidden" => *hidden = num(key, value)?,
                "learning_rate" => *learning_rate = num(key, value)?,
                "epochs" => *epochs = num(key, value)?,
                _ => return unknown(kind),
            },
            ClassifierSpec::Svm {
                c,
                kernel,
                tolerance,
                max_passes,
            } => match key {
                "c" => *c = num(key, value)?,
                "tolerance" => *tolerance = num(key, value)?,
                "max_passes" => *max_passes = num(key, value)?,
                "kernel" => {
                    *kernel = match value.trim() {
                        "linear" => Kernel::Linear,
                        "poly" | "polynomial" => Kernel::Polynomial { degree: 3, gamma: None },
                        "rbf" => Kernel::Rbf { gamma: None },
                        other => return Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
                    }
                }
                "gamma" => {
                    let g: f64 = num(key, value)?;
                    match kernel {
                        Kernel::Polynomial { gamma, .. } | Kernel::Rbf { gamma } => *gamma = Some(g),
                        Kernel::Linear => return Err(Error::InvalidConfig("the linear kernel has no gamma".into())),
                    }
                }
                "degree" => match kernel {
                    Kernel::Polynomial { degree, .. } => *degree = num(key, value)?,
                    _ => return Err(Error::InvalidConfig("degree applies to the polynomial kernel".into())),
                },
                _ => return unknown(kind),
            },
        }
        self.validate()
    }

    /// Compact `key=value` rendering of the hyperparameters.
    pub fn describe(&self) -> String {
        match self {
            ClassifierSpec::GaussianNb { var_smoothing } => format!("var_smoothing={var_smoothing}"),
            ClassifierSpec::AdaBoost { rounds }
            | ClassifierSpec::LogitBoost { rounds }
            | ClassifierSpec::RusBoost { rounds } => format!("rounds={rounds}"),
            ClassifierSpec::NeuralNet {
                hidden,
                learning_rate,
                epochs,
            } => format!("hidden={hidden};learning_rate={learning_rate};epochs={epochs}"),
            ClassifierSpec::Svm { c, kernel, .. } => format!("c={c};kernel={kernel}"),
        }
    }
}

/// Fitted parameters, one variant per family. AdaBoost and RUSBoost share
/// the stump-ensemble representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    GaussianNb(naive_bayes::NaiveBayesParams),
    StumpEnsemble(boosting::StumpEnsemble),
    Additive(logitboost::AdditiveModel),
    NeuralNet(mlp::MlpParams),
    Svm(svm::SvmParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Feature-space tag of the training matrix (`raw`, `original`, `reduced`, `pca`).
    pub feature_space: String,
    pub n_features: usize,
    pub n_train: usize,
    pub training_accuracy: f64,
    /// Wall-clock training time; not persisted so model files stay reproducible.
    #[serde(skip)]
    pub train_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub params: ModelParams,
    pub meta: TrainingMeta,
}

/// Tag used for matrices that did not go through a feature pipeline.
pub const RAW_SPACE: &str = "raw";

pub fn train(spec: &ClassifierSpec, x: ArrayView2<'_, f64>, y: &[Label], rng: &mut RngStream) -> Result<TrainedModel> {
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    check_labels(y)?;
    require_both_classes(y)?;
    if let Some(((row, column), &value)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, column, value });
    }

    let start = Instant::now();
    let params = match *spec {
        ClassifierSpec::GaussianNb { var_smoothing } => ModelParams::GaussianNb(naive_bayes::fit(x, y, var_smoothing)?),
        ClassifierSpec::AdaBoost { rounds } => ModelParams::StumpEnsemble(boosting::fit_adaboost(x, y, rounds, None)?),
        ClassifierSpec::RusBoost { rounds } => {
            ModelParams::StumpEnsemble(boosting::fit_rusboost(x, y, rounds, rng, None)?)
        }
        ClassifierSpec::LogitBoost { rounds } => ModelParams::Additive(logitboost::fit(x, y, rounds)?),
        ClassifierSpec::NeuralNet {
            hidden,
            learning_rate,
            epochs,
        } => ModelParams::NeuralNet(mlp::fit(x, y, hidden, learning_rate, epochs, rng)?),
        ClassifierSpec::Svm {
            c,
            kernel,
            tolerance,
            max_passes,
        } => ModelParams::Svm(svm::fit(x, y, c, kernel, tolerance, max_passes)?),
    };
    let train_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut model = TrainedModel {
        spec: spec.clone(),
        params,
        meta: TrainingMeta {
            feature_space: RAW_SPACE.to_string(),
            n_features: x.ncols(),
            n_train: x.nrows(),
            training_accuracy: 0.0,
            train_ms,
        },
    };
    let predicted = model.predict(x)?;
    let correct = predicted.iter().zip(y).filter(|(p, a)| p == a).count();
    model.meta.training_accuracy = correct as f64 / y.len() as f64;
    Ok(model)
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn with_feature_space(mut self, tag: impl Into<String>) -> Self {
        self.meta.feature_space = tag.into();
        self
    }

    fn check_dim(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.meta.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.meta.n_features,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        match &self.params {
            ModelParams::GaussianNb(p) => p.score(row),
            ModelParams::StumpEnsemble(p) => p.score(row),
            ModelParams::Additive(p) => p.score(row),
            ModelParams::NeuralNet(p) => p.score(row),
            ModelParams::Svm(p) => p.score(row),
        }
    }

    pub fn decision_scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_dim(&x)?;
        Ok(x.rows().into_iter().map(|row| self.score_row(row)).collect())
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Label>> {
        Ok(self.decision_scores(x)?.into_iter().map(label_from_score).collect())
    }
}

/// Positive class on ties.
pub fn label_from_score(score: f64) -> Label {
    if score >= 0.0 {
        1
    } else {
        0
    }
}

pub fn predict(m: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Vec<Label>> {
    m.predict(x)
}

pub fn decision_scores(m: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    m.decision_scores(x)
}

/// Labels as +1 / -1.
pub(crate) fn to_signed(y: &[Label]) -> Vec<f64> {
    y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
}
