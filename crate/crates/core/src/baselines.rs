//! Comparison classifiers: CART decision tree, logistic regression and
//! Gaussian naive Bayes. Every model outputs a positive-class score in
//! `[0, 1]` and thresholds it at 0.5.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::svm::{fit_scaler, Scaler, SvmError};
use crate::Label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),
}

impl From<SvmError> for BaselineError {
    fn from(e: SvmError) -> Self {
        match e {
            SvmError::EmptyDataset => BaselineError::EmptyDataset,
            SvmError::SingleClass => BaselineError::SingleClass,
            SvmError::DimensionMismatch { expected, got } => BaselineError::DimensionMismatch { expected, got },
            SvmError::LengthMismatch { rows, labels } => BaselineError::LengthMismatch { rows, labels },
            SvmError::BadParameter(p) => BaselineError::BadParameter(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    DecisionTree,
    LogisticRegression,
    NaiveBayes,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::DecisionTree, BaselineKind::LogisticRegression, BaselineKind::NaiveBayes];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::DecisionTree => "decision_tree",
            BaselineKind::LogisticRegression => "logistic_regression",
            BaselineKind::NaiveBayes => "naive_bayes",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown classifier `{0}`")]
pub struct ParseKindError(pub String);

impl FromStr for BaselineKind {
    type Err = ParseKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "decision_tree" | "tree" => Ok(BaselineKind::DecisionTree),
            "logistic_regression" | "logistic" => Ok(BaselineKind::LogisticRegression),
            "naive_bayes" | "nb" => Ok(BaselineKind::NaiveBayes),
            _ => Err(ParseKindError(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub variance_floor: f64,
    pub standardize: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { max_depth: 5, learning_rate: 0.1, epochs: 2000, variance_floor: 1e-9, standardize: true }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(BaselineError::BadParameter("learning rate must be > 0"));
        }
        if !(self.variance_floor > 0.0) {
            return Err(BaselineError::BadParameter("variance floor must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Fraction of positive training points reaching the leaf.
        score: f64,
        count: usize,
    },
    /// Points with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { score, .. } => return *score,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineParams {
    DecisionTree { root: TreeNode },
    LogisticRegression { weights: Vec<f64>, bias: f64 },
    /// Index 0 is the negative class, index 1 the positive class.
    NaiveBayes { means: [Vec<f64>; 2], variances: [Vec<f64>; 2], priors: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub params: BaselineParams,
    pub scaler: Scaler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTraining {
    pub model: BaselineModel,
    /// Mean log-loss before each epoch and after the last (logistic only).
    pub loss_history: Vec<f64>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

fn build_tree(rows: &[Vec<f64>], y: &[bool], idx: &mut [usize], depth: usize, max_depth: usize) -> TreeNode {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| y[i]).count();
    let leaf = TreeNode::Leaf { score: pos as f64 / n as f64, count: n };
    if depth >= max_depth || pos == 0 || pos == n {
        return leaf;
    }
    let dim = rows[idx[0]].len();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..dim {
        idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let mut left_pos = 0;
        for s in 1..n {
            if y[idx[s - 1]] {
                left_pos += 1;
            }
            let (lo, hi) = (rows[idx[s - 1]][f], rows[idx[s]][f]);
            if lo == hi {
                continue;
            }
            let impurity = (s as f64 * gini(left_pos, s) + (n - s) as f64 * gini(pos - left_pos, n - s)) / n as f64;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, 0.5 * (lo + hi)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf;
    };
    idx.sort_by(|&a, &b| (rows[a][feature] > threshold).cmp(&(rows[b][feature] > threshold)).then(a.cmp(&b)));
    let split = idx.iter().position(|&i| rows[i][feature] > threshold).unwrap_or(n);
    let (l, r) = idx.split_at_mut(split);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(build_tree(rows, y, l, depth + 1, max_depth)),
        right: Box::new(build_tree(rows, y, r, depth + 1, max_depth)),
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

fn log_loss(rows: &[Vec<f64>], y: &[bool], w: &[f64], b: f64) -> f64 {
    let mut total = 0.0;
    for (x, &t) in rows.iter().zip(y) {
        let z = b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
        total += if t { softplus(-z) } else { softplus(z) };
    }
    total / rows.len() as f64
}

fn train_logistic(rows: &[Vec<f64>], y: &[bool], config: &BaselineConfig) -> (Vec<f64>, f64, Vec<f64>) {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let (mut w, mut b) = (vec![0.0; dim], 0.0);
    let mut history = Vec::with_capacity(config.epochs + 1);
    let mut grad = vec![0.0; dim];
    for _ in 0..config.epochs {
        history.push(log_loss(rows, y, &w, b));
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, &t) in rows.iter().zip(y) {
            let z = b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            let r = sigmoid(z) - if t { 1.0 } else { 0.0 };
            for (g, xk) in grad.iter_mut().zip(x) {
                *g += r * xk;
            }
            grad_b += r;
        }
        for (wk, g) in w.iter_mut().zip(&grad) {
            *wk -= config.learning_rate * g / n;
        }
        b -= config.learning_rate * grad_b / n;
    }
    history.push(log_loss(rows, y, &w, b));
    (w, b, history)
}

fn train_naive_bayes(rows: &[Vec<f64>], y: &[bool], floor: f64) -> BaselineParams {
    let dim = rows[0].len();
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    let mut variances = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (x, &t) in rows.iter().zip(y) {
        let c = t as usize;
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(x) {
            *m += v;
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    for (x, &t) in rows.iter().zip(y) {
        let c = t as usize;
        for k in 0..dim {
            let d = x[k] - means[c][k];
            variances[c][k] += d * d;
        }
    }
    for c in 0..2 {
        variances[c].iter_mut().for_each(|v| *v = (*v / counts[c] as f64).max(floor));
    }
    let n = rows.len() as f64;
    let priors = [counts[0] as f64 / n, counts[1] as f64 / n];
    BaselineParams::NaiveBayes { means, variances, priors }
}

pub fn train_baseline<R: AsRef<[f64]>>(
    kind: BaselineKind,
    rows: &[R],
    labels: &[Label],
    config: &BaselineConfig,
) -> Result<BaselineTraining, BaselineError> {
    if rows.len() != labels.len() {
        return Err(BaselineError::LengthMismatch { rows: rows.len(), labels: labels.len() });
    }
    config.validate()?;
    let scaler = if config.standardize {
        fit_scaler(rows)?
    } else {
        let dim = rows.first().ok_or(BaselineError::EmptyDataset)?.as_ref().len();
        Scaler::identity(dim)
    };
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply(r.as_ref())).collect::<Result<_, _>>()?;
    let y: Vec<bool> = labels.iter().map(|&l| l == Label::Infected).collect();
    if y.iter().all(|&t| t) || !y.iter().any(|&t| t) {
        return Err(BaselineError::SingleClass);
    }
    let mut loss_history = Vec::new();
    let params = match kind {
        BaselineKind::DecisionTree => {
            let mut idx: Vec<usize> = (0..scaled.len()).collect();
            BaselineParams::DecisionTree { root: build_tree(&scaled, &y, &mut idx, 0, config.max_depth) }
        }
        BaselineKind::LogisticRegression => {
            let (weights, bias, history) = train_logistic(&scaled, &y, config);
            loss_history = history;
            BaselineParams::LogisticRegression { weights, bias }
        }
        BaselineKind::NaiveBayes => train_naive_bayes(&scaled, &y, config.variance_floor),
    };
    Ok(BaselineTraining { model: BaselineModel { params, scaler }, loss_history })
}

fn gaussian_log_likelihood(x: &[f64], means: &[f64], variances: &[f64]) -> f64 {
    let mut ll = 0.0;
    for ((v, m), s2) in x.iter().zip(means).zip(variances) {
        let d = v - m;
        ll -= 0.5 * libm::log(2.0 * core::f64::consts::PI * s2) + d * d / (2.0 * s2);
    }
    ll
}

impl BaselineModel {
    pub fn kind(&self) -> BaselineKind {
        match self.params {
            BaselineParams::DecisionTree { .. } => BaselineKind::DecisionTree,
            BaselineParams::LogisticRegression { .. } => BaselineKind::LogisticRegression,
            BaselineParams::NaiveBayes { .. } => BaselineKind::NaiveBayes,
        }
    }

    /// Positive-class score in `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> Result<f64, BaselineError> {
        let z = self.scaler.apply(x)?;
        Ok(match &self.params {
            BaselineParams::DecisionTree { root } => root.score(&z),
            BaselineParams::LogisticRegression { weights, bias } => {
                sigmoid(bias + weights.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())
            }
            BaselineParams::NaiveBayes { means, variances, priors } => {
                let neg = libm::log(priors[0]) + gaussian_log_likelihood(&z, &means[0], &variances[0]);
                let pos = libm::log(priors[1]) + gaussian_log_likelihood(&z, &means[1], &variances[1]);
                sigmoid(pos - neg)
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64), BaselineError> {
        let s = self.score(x)?;
        Ok((if s >= 0.5 { Label::Infected } else { Label::Fresh }, s))
    }
}

pub fn predict_baseline(model: &BaselineModel, x: &[f64]) -> Result<(Label, f64), BaselineError> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw() -> BaselineConfig {
        BaselineConfig { standardize: false, ..BaselineConfig::default() }
    }

    fn blobs(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { Label::Infected } else { Label::Fresh };
            let center = if label == Label::Infected { 5.0 } else { -5.0 };
            rows.push((0..dim).map(|_| center + rng.gen_range(-0.5..0.5)).collect());
            labels.push(label);
        }
        (rows, labels)
    }

    #[test]
    fn one_split_tree() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let labels = [Label::Fresh, Label::Fresh, Label::Infected, Label::Infected];
        let t = train_baseline(BaselineKind::DecisionTree, &rows, &labels, &raw()).unwrap();
        let BaselineParams::DecisionTree { root } = &t.model.params else { panic!() };
        assert_eq!(root.depth(), 1);
        let TreeNode::Split { threshold, .. } = root else { panic!() };
        assert!(*threshold > 1.0 && *threshold < 2.0);
        for (x, l) in rows.iter().zip(&labels) {
            assert_eq!(t.model.predict(x).unwrap().0, *l);
        }
    }

    #[test]
    fn leaf_fraction() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let labels = [Label::Infected, Label::Fresh, Label::Infected, Label::Infected];
        let config = BaselineConfig { max_depth: 0, ..raw() };
        let t = train_baseline(BaselineKind::DecisionTree, &rows, &labels, &config).unwrap();
        assert_eq!(t.model.score(&[1.0]).unwrap(), 0.75);
    }

    #[test]
    fn depth_is_capped() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let labels: Vec<Label> = (0..64).map(|i| if i % 2 == 0 { Label::Infected } else { Label::Fresh }).collect();
        let t = train_baseline(BaselineKind::DecisionTree, &rows, &labels, &BaselineConfig::default()).unwrap();
        let BaselineParams::DecisionTree { root } = &t.model.params else { panic!() };
        assert_eq!(root.depth(), 5);
    }

    #[test]
    fn zero_weight_logistic() {
        let model = BaselineModel {
            params: BaselineParams::LogisticRegression { weights: vec![0.0; 3], bias: 0.0 },
            scaler: Scaler::identity(3),
        };
        assert_eq!(model.score(&[4.0, -1.0, 9.0]).unwrap(), 0.5);
        assert!(model.score(&[1.0]).is_err());
    }

    #[test]
    fn logistic_two_points() {
        let rows = [vec![-1.0], vec![1.0]];
        let labels = [Label::Fresh, Label::Infected];
        let t = train_baseline(BaselineKind::LogisticRegression, &rows, &labels, &raw()).unwrap();
        assert_eq!(t.model.predict(&[-1.0]).unwrap().0, Label::Fresh);
        assert_eq!(t.model.predict(&[1.0]).unwrap().0, Label::Infected);
        assert_eq!(t.loss_history.len(), 2001);
        assert!((t.loss_history[0] - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn naive_bayes_at_class_mean() {
        let rows = [vec![0.0], vec![0.2], vec![1.0], vec![1.2]];
        let labels = [Label::Fresh, Label::Fresh, Label::Infected, Label::Infected];
        let t = train_baseline(BaselineKind::NaiveBayes, &rows, &labels, &raw()).unwrap();
        assert!(t.model.score(&[1.1]).unwrap() > 0.5);
        assert!(t.model.score(&[0.1]).unwrap() < 0.5);
    }

    #[test]
    fn naive_bayes_constant_feature() {
        let rows = [vec![1.0, 0.0], vec![1.0, 0.1], vec![1.0, 2.0], vec![1.0, 2.1]];
        let labels = [Label::Fresh, Label::Fresh, Label::Infected, Label::Infected];
        for standardize in [false, true] {
            let config = BaselineConfig { standardize, ..BaselineConfig::default() };
            let t = train_baseline(BaselineKind::NaiveBayes, &rows, &labels, &config).unwrap();
            for q in [[1.0, 0.0], [7.0, 1.0], [-3.0, 50.0]] {
                let s = t.model.score(&q).unwrap();
                assert!(s.is_finite() && (0.0..=1.0).contains(&s));
            }
        }
    }

    #[test]
    fn all_kinds_fit_two_blobs() {
        let (rows, labels) = blobs(60, 10, 3);
        for kind in BaselineKind::ALL {
            let t = train_baseline(kind, &rows, &labels, &BaselineConfig::default()).unwrap();
            for (x, l) in rows.iter().zip(&labels) {
                assert_eq!(t.model.predict(x).unwrap().0, *l, "{kind}");
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = [vec![0.0], vec![1.0]];
        for kind in BaselineKind::ALL {
            assert_eq!(
                train_baseline(kind, &rows, &[Label::Fresh; 2], &BaselineConfig::default()).unwrap_err(),
                BaselineError::SingleClass
            );
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in BaselineKind::ALL {
            assert_eq!(kind.as_str().parse::<BaselineKind>().unwrap(), kind);
        }
        assert!("svm".parse::<BaselineKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scores_in_unit_interval_and_loss_monotone(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 4..30),
            bits in proptest::collection::vec(proptest::bool::ANY, 30),
        ) {
            let mut labels: Vec<Label> = rows.iter().zip(&bits).map(|(_, &b)| if b { Label::Infected } else { Label::Fresh }).collect();
            labels[0] = Label::Infected;
            labels[1] = Label::Fresh;
            let config = BaselineConfig { epochs: 200, ..BaselineConfig::default() };
            for kind in BaselineKind::ALL {
                let t = train_baseline(kind, &rows, &labels, &config).unwrap();
                for w in t.loss_history.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-10);
                }
                for x in &rows {
                    let s = t.model.score(x).unwrap();
                    prop_assert!(s.is_finite() && (0.0..=1.0).contains(&s));
                }
            }
        }
    }
}
