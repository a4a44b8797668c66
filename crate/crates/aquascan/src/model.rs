//! Versioned model documents (JSON).

use std::path::Path;

use aquascan_core::baselines::BaselineModel;
use aquascan_core::features::FEATURE_NAMES;
use aquascan_core::svm::SvmModel;
use aquascan_core::Label;
use serde::{Deserialize, Serialize};

use crate::config::{ClassifierKind, PipelineConfig};
use crate::error::{AppError, Result};

pub const MODEL_FORMAT: &str = "aquascan-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainedClassifier {
    Svm(SvmModel),
    Baseline(BaselineModel),
}

/// Output of a trained classifier for one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub label: Label,
    /// SVM decision value or baseline positive-class score.
    pub score: f64,
    /// Positive-class score mapped into `[0, 1]`; the SVM decision value
    /// goes through the logistic function.
    pub unit_score: f64,
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::Svm(_) => ClassifierKind::Svm,
            TrainedClassifier::Baseline(b) => match b.kind() {
                aquascan_core::baselines::BaselineKind::DecisionTree => ClassifierKind::DecisionTree,
                aquascan_core::baselines::BaselineKind::LogisticRegression => ClassifierKind::LogisticRegression,
                aquascan_core::baselines::BaselineKind::NaiveBayes => ClassifierKind::NaiveBayes,
            },
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<Scored> {
        Ok(match self {
            TrainedClassifier::Svm(m) => {
                let score = m.decision_value(x)?;
                let label = if score >= 0.0 { m.label_map.positive } else { m.label_map.negative };
                Scored { label, score, unit_score: aquascan_core::baselines::sigmoid(score) }
            }
            TrainedClassifier::Baseline(m) => {
                let (label, score) = m.predict(x)?;
                Scored { label, score, unit_score: score }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub config: PipelineConfig,
    pub classifier: TrainedClassifier,
}

impl ModelFile {
    pub fn new(config: PipelineConfig, classifier: TrainedClassifier) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            config,
            classifier,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let json_err = |e| AppError::Json { path: path.to_path_buf(), source: e };
        let value: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("<missing>");
        let version = value.get("version").and_then(|v| v.as_u64());
        if format != MODEL_FORMAT || version != Some(MODEL_VERSION as u64) {
            return Err(AppError::ModelVersionMismatch {
                path: path.to_path_buf(),
                found: format!("{format} v{}", version.map_or("?".into(), |v| v.to_string())),
                expected: format!("{MODEL_FORMAT} v{MODEL_VERSION}"),
            });
        }
        serde_json::from_str(text).map_err(json_err)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_file(path, self.to_json().as_bytes())
    }
}
