//! Versioned JSON documents for trained models.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ModelKind, ModelParams, TrainedModel, RAW_SPACE};
use crate::cohort::{Cohort, Label, Source};
use crate::error::{Error, Result};
use crate::preprocess::FeaturePipeline;

pub const MODEL_FORMAT: &str = "tpi-model";
pub const MODEL_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u64,
    pub model: TrainedModel,
    /// Transformation applied to raw cohort rows before scoring, if any.
    pub preprocessing: Option<FeaturePipeline>,
}

impl ModelDocument {
    pub fn new(model: TrainedModel, preprocessing: Option<FeaturePipeline>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_SCHEMA_VERSION,
            model,
            preprocessing,
        }
    }

    /// Brings `input` into the space the classifier was trained on.
    ///
    /// Raw cohorts go through the stored pipeline. Anything else must already
    /// carry the model's feature-space tag.
    pub fn features_for(&self, input: &Cohort) -> Result<Cohort> {
        let input_space = space_tag(&input.source);
        let model_space = &self.model.meta.feature_space;
        match &self.preprocessing {
            Some(p) if input_space == RAW_SPACE => {
                if p.space.as_str() != model_space {
                    return Err(Error::Document(format!(
                        "pipeline produces '{}' features but the model is tagged '{model_space}'",
                        p.space
                    )));
                }
                if input.n_features() != p.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: p.input_dim(),
                        got: input.n_features(),
                    });
                }
                p.transform(input)
            }
            _ if input_space == *model_space => Ok(input.clone()),
            _ => Err(Error::FeatureSpaceMismatch {
                model: model_space.clone(),
                input: input_space,
            }),
        }
    }

    /// Labels and decision scores for every row of `input`.
    pub fn score_cohort(&self, input: &Cohort) -> Result<(Vec<Label>, Vec<f64>)> {
        let x = self.features_for(input)?;
        let scores = self.model.decision_scores(x.features.view())?;
        let labels = scores.iter().map(|&s| super::label_from_score(s)).collect();
        Ok((labels, scores))
    }
}

fn space_tag(source: &Source) -> String {
    match source {
        Source::Derived { space, .. } => space.clone(),
        _ => RAW_SPACE.to_string(),
    }
}

pub fn serialize_model(doc: &ModelDocument) -> Result<String> {
    serde_json::to_string_pretty(doc).map_err(|e| Error::Document(e.to_string()))
}

pub fn deserialize_model(text: &str) -> Result<ModelDocument> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    match value.get("format").and_then(Value::as_str) {
        Some(MODEL_FORMAT) => {}
        Some(other) => return Err(Error::Document(format!("unexpected format '{other}'"))),
        None => return Err(Error::Document("missing 'format'".into())),
    }
    let version = value
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Document("missing 'version'".into()))?;
    if version != MODEL_SCHEMA_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_SCHEMA_VERSION,
        });
    }
    let kind = value
        .pointer("/model/spec/kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Document("missing model kind".into()))?;
    let kind: ModelKind = kind.parse()?;

    let doc: ModelDocument = serde_json::from_value(value).map_err(|e| Error::Document(e.to_string()))?;
    let consistent = matches!(
        (kind, &doc.model.params),
        (ModelKind::GaussianNb, ModelParams::GaussianNb(_))
            | (ModelKind::AdaBoost | ModelKind::RusBoost, ModelParams::StumpEnsemble(_))
            | (ModelKind::LogitBoost, ModelParams::Additive(_))
            | (ModelKind::NeuralNet, ModelParams::NeuralNet(_))
            | (ModelKind::Svm, ModelParams::Svm(_))
    );
    if !consistent {
        return Err(Error::Document(format!("parameters do not belong to a {kind} model")));
    }
    doc.model.spec.validate()?;
    Ok(doc)
}
