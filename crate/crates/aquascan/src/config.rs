//! Full run configuration: every stage parameter plus the global seed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use aquascan_core::baselines::{BaselineConfig, BaselineKind};
use aquascan_core::pipeline::ExtractionConfig;
use aquascan_core::svm::SvmConfig;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Svm,
    DecisionTree,
    LogisticRegression,
    NaiveBayes,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Svm,
        ClassifierKind::DecisionTree,
        ClassifierKind::LogisticRegression,
        ClassifierKind::NaiveBayes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::NaiveBayes => "naive_bayes",
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            ClassifierKind::Svm => None,
            ClassifierKind::DecisionTree => Some(BaselineKind::DecisionTree),
            ClassifierKind::LogisticRegression => Some(BaselineKind::LogisticRegression),
            ClassifierKind::NaiveBayes => Some(BaselineKind::NaiveBayes),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("svm") {
            return Ok(ClassifierKind::Svm);
        }
        match s.parse::<BaselineKind>() {
            Ok(BaselineKind::DecisionTree) => Ok(ClassifierKind::DecisionTree),
            Ok(BaselineKind::LogisticRegression) => Ok(ClassifierKind::LogisticRegression),
            Ok(BaselineKind::NaiveBayes) => Ok(ClassifierKind::NaiveBayes),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    pub classifier: ClassifierKind,
    pub svm: SvmConfig,
    pub baseline: BaselineConfig,
    pub split_ratio: f64,
    /// Drives split shuffling, k-means++ seeding and the SMO heuristic.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut c = Self {
            extraction: ExtractionConfig::default(),
            classifier: ClassifierKind::Svm,
            svm: SvmConfig::default(),
            baseline: BaselineConfig::default(),
            split_ratio: 0.868,
            seed: 42,
        };
        c.set_seed(42);
        c
    }
}

impl PipelineConfig {
    /// Sets the global seed and every stage seed derived from it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.extraction.segment.seed = seed;
        self.svm.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.svm.validate()?;
        self.baseline.validate()?;
        if !(0.0..=1.0).contains(&self.split_ratio) {
            return Err(AppError::Usage(format!("split ratio {} must lie in [0, 1]", self.split_ratio)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::Json { path: path.to_path_buf(), source: e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let mut c = PipelineConfig::default();
        c.extraction.clahe.alpha = 0.1 + 0.2;
        c.svm.c = 1.0 / 3.0;
        c.set_seed(u64::MAX);
        let back: PipelineConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seed_reaches_every_stage() {
        let mut c = PipelineConfig::default();
        c.set_seed(7);
        assert_eq!((c.seed, c.extraction.segment.seed, c.svm.seed), (7, 7, 7));
    }

    #[test]
    fn classifier_names() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("forest".parse::<ClassifierKind>().is_err());
    }
}
