//! Confusion counts, percentage metrics and ROC analysis.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{actual} actual labels but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no examples to evaluate")]
    EmptyInput,
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("ROC analysis needs both classes present")]
    SingleClass,
    #[error("score {index} is NaN")]
    NanScore { index: usize },
}

/// Counts relative to a declared positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts with the other class declared positive.
    pub fn flipped(&self) -> Self {
        Self { tp: self.tn, tn: self.tp, fp: self.fn_, fn_: self.fp }
    }
}

pub fn confusion(actual: &[Label], predicted: &[Label], positive: Label) -> Result<ConfusionMatrix, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
    }
    if actual.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Metrics whose denominator was zero; they are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UndefinedMetrics {
    pub precision: bool,
    /// Also covers `tpr` and `fnr`.
    pub recall: bool,
    /// Also covers `fpr`.
    pub specificity: bool,
    pub f1: bool,
}

impl UndefinedMetrics {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.specificity || self.f1
    }
}

/// All values are percentages in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub tpr: f64,
    pub undefined: UndefinedMetrics,
}

impl MetricReport {
    pub const NAMES: [&'static str; 8] = ["accuracy", "precision", "recall", "specificity", "f1", "fpr", "fnr", "tpr"];

    pub fn values(&self) -> [f64; 8] {
        [self.accuracy, self.precision, self.recall, self.specificity, self.f1, self.fpr, self.fnr, self.tpr]
    }

    /// Whether the metric at `NAMES[i]` had a zero denominator.
    pub fn is_undefined(&self, i: usize) -> bool {
        let u = &self.undefined;
        match i {
            1 => u.precision,
            2 | 6 | 7 => u.recall,
            3 | 5 => u.specificity,
            4 => u.f1,
            _ => false,
        }
    }
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn metric_report(cm: &ConfusionMatrix) -> Result<MetricReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyConfusion);
    }
    let accuracy = 100.0 * (cm.tp + cm.tn) as f64 / total as f64;
    let precision = percent(cm.tp, cm.tp + cm.fp);
    let recall = percent(cm.tp, cm.tp + cm.fn_);
    let specificity = percent(cm.tn, cm.tn + cm.fp);
    // Equal to 2PR / (P + R) whenever both are defined.
    let f1 = percent(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    let undefined = UndefinedMetrics {
        precision: precision.is_none(),
        recall: recall.is_none(),
        specificity: specificity.is_none(),
        f1: f1.is_none(),
    };
    Ok(MetricReport {
        accuracy,
        precision: precision.unwrap_or(0.0),
        recall: recall.unwrap_or(0.0),
        specificity: specificity.unwrap_or(0.0),
        f1: f1.unwrap_or(0.0),
        fpr: percent(cm.fp, cm.tn + cm.fp).unwrap_or(0.0),
        fnr: percent(cm.fn_, cm.tp + cm.fn_).unwrap_or(0.0),
        tpr: recall.unwrap_or(0.0),
        undefined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive; `+inf` for the origin.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn check_scores(scores: &[f64]) -> Result<(), MetricsError> {
    match scores.iter().position(|s| s.is_nan()) {
        Some(index) => Err(MetricsError::NanScore { index }),
        None => Ok(()),
    }
}

/// Trapezoidal area under a polyline of `(fpr, tpr)` points.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5).sum()
}

/// ROC of `scores` against boolean indicators of the positive class.
pub fn roc_from_indicators(scores: &[f64], positive: &[bool]) -> Result<RocCurve, MetricsError> {
    if scores.len() != positive.len() {
        return Err(MetricsError::LengthMismatch { actual: positive.len(), predicted: scores.len() });
    }
    check_scores(scores)?;
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if positive[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint { threshold, fpr: fp as f64 / n as f64, tpr: tp as f64 / p as f64 });
    }
    let auc = trapezoid_auc(&points);
    Ok(RocCurve { points, auc })
}

pub fn roc_curve(scores: &[f64], actual: &[Label], positive: Label) -> Result<RocCurve, MetricsError> {
    let ind: Vec<bool> = actual.iter().map(|&l| l == positive).collect();
    roc_from_indicators(scores, &ind)
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting ½.
pub fn pair_count_auc(scores: &[f64], positive: &[bool]) -> Result<f64, MetricsError> {
    if scores.len() != positive.len() {
        return Err(MetricsError::LengthMismatch { actual: positive.len(), predicted: scores.len() });
    }
    check_scores(scores)?;
    let (mut wins, mut pairs) = (0.0, 0usize);
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    if pairs == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok(wins / pairs as f64)
}

/// Scores and membership indicators for one class against the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRest {
    pub class: Label,
    pub scores: Vec<f64>,
    pub indicators: Vec<bool>,
}

/// Splits a binary problem into two one-vs-rest views: `s` for `positive`
/// and `1 - s` for the other class. Scores should lie in `[0, 1]`.
pub fn binary_one_vs_rest(scores: &[f64], actual: &[Label], positive: Label) -> [OneVsRest; 2] {
    [
        OneVsRest {
            class: positive,
            scores: scores.to_vec(),
            indicators: actual.iter().map(|&l| l == positive).collect(),
        },
        OneVsRest {
            class: positive.other(),
            scores: scores.iter().map(|s| 1.0 - s).collect(),
            indicators: actual.iter().map(|&l| l != positive).collect(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedAuc {
    pub micro: f64,
    pub macro_: f64,
    pub per_class: Vec<(Label, f64)>,
}

pub fn averaged_auc(classes: &[OneVsRest]) -> Result<AveragedAuc, MetricsError> {
    if classes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut per_class = Vec::with_capacity(classes.len());
    let (mut pooled_scores, mut pooled_ind) = (Vec::new(), Vec::new());
    for c in classes {
        per_class.push((c.class, roc_from_indicators(&c.scores, &c.indicators)?.auc));
        pooled_scores.extend_from_slice(&c.scores);
        pooled_ind.extend_from_slice(&c.indicators);
    }
    let macro_ = per_class.iter().map(|(_, a)| a).sum::<f64>() / per_class.len() as f64;
    let micro = roc_from_indicators(&pooled_scores, &pooled_ind)?.auc;
    Ok(AveragedAuc { micro, macro_, per_class })
}
