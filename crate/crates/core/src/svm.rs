//! Soft-margin support vector machine trained on the dual problem by
//! sequential minimal optimization.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Label;

/// Alphas this close to a bound are treated as sitting on it.
const BOUND_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
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

/// Per-feature z-score standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Features with zero spread; they scale to 0.
    pub constant: Vec<bool>,
}

fn check_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<usize, SvmError> {
    let dim = rows.first().ok_or(SvmError::EmptyDataset)?.as_ref().len();
    for r in rows {
        if r.as_ref().len() != dim {
            return Err(SvmError::DimensionMismatch { expected: dim, got: r.as_ref().len() });
        }
    }
    Ok(dim)
}

pub fn fit_scaler<R: AsRef<[f64]>>(rows: &[R]) -> Result<Scaler, SvmError> {
    let dim = check_rows(rows)?;
    let n = rows.len() as f64;
    let mut means = vec![0.0; dim];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in vars.iter_mut().zip(r.as_ref()).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let std_devs: Vec<f64> = vars.iter().map(|s| libm::sqrt(s / n)).collect();
    let constant = std_devs.iter().map(|&s| !(s > 0.0)).collect();
    Ok(Scaler { means, std_devs, constant })
}

impl Scaler {
    /// A scaler that leaves inputs unchanged.
    pub fn identity(dim: usize) -> Self {
        Self { means: vec![0.0; dim], std_devs: vec![1.0; dim], constant: vec![false; dim] }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok((0..x.len())
            .map(|k| if self.constant[k] { 0.0 } else { (x[k] - self.means[k]) / self.std_devs[k] })
            .collect())
    }

    /// Maps scaled values back; constant features come back as their mean.
    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>, SvmError> {
        if z.len() != self.dim() {
            return Err(SvmError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok((0..z.len())
            .map(|k| if self.constant[k] { self.means[k] } else { z[k] * self.std_devs[k] + self.means[k] })
            .collect())
    }
}

pub fn apply_scaler(scaler: &Scaler, x: &[f64]) -> Result<Vec<f64>, SvmError> {
    scaler.apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    #[default]
    Linear,
    Polynomial { degree: u32, gamma: f64, coef0: f64 },
    Gaussian { gamma: f64 },
    Sigmoid { gamma: f64, coef0: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, gamma, coef0 } => {
                if degree < 1 {
                    Err(SvmError::BadParameter("polynomial degree must be >= 1"))
                } else if !(gamma > 0.0) || !gamma.is_finite() || !coef0.is_finite() {
                    Err(SvmError::BadParameter("polynomial gamma must be > 0"))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Gaussian { gamma } | KernelSpec::Sigmoid { gamma, .. } if !(gamma > 0.0) || !gamma.is_finite() => {
                Err(SvmError::BadParameter("kernel gamma must be > 0"))
            }
            KernelSpec::Sigmoid { coef0, .. } if !coef0.is_finite() => Err(SvmError::BadParameter("sigmoid coef0 must be finite")),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Sigmoid { .. } => "sigmoid",
        }
    }

    /// Evaluation without the dimension check.
    #[inline]
    fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match *self {
            KernelSpec::Linear => dot(),
            KernelSpec::Polynomial { degree, gamma, coef0 } => libm::pow(gamma * dot() + coef0, degree as f64),
            KernelSpec::Gaussian { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                libm::exp(-gamma * d2)
            }
            KernelSpec::Sigmoid { gamma, coef0 } => libm::tanh(gamma * dot() + coef0),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64, SvmError> {
    if x1.len() != x2.len() {
        return Err(SvmError::DimensionMismatch { expected: x1.len(), got: x2.len() });
    }
    Ok(spec.eval_unchecked(x1, x2))
}

fn kernel_matrix<R: AsRef<[f64]>>(kernel: &KernelSpec, rows: &[R]) -> Vec<f64> {
    let n = rows.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval_unchecked(rows[i].as_ref(), rows[j].as_ref());
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn labels_to_signs(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| l.sign()).collect()
}

fn check_signs(y: &[f64]) -> Result<(), SvmError> {
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::BadParameter("labels must be +1 or -1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

/// `Q(α) = Σ α_i - ½ ΣΣ α_i α_j y_i y_j K(x_i, x_j)`.
pub fn dual_objective<R: AsRef<[f64]>>(alphas: &[f64], rows: &[R], y: &[f64], kernel: &KernelSpec) -> Result<f64, SvmError> {
    if alphas.len() != rows.len() || y.len() != rows.len() {
        return Err(SvmError::LengthMismatch { rows: rows.len(), labels: y.len().min(alphas.len()) });
    }
    if rows.is_empty() {
        return Ok(0.0);
    }
    check_rows(rows)?;
    let mut quad = 0.0;
    for i in 0..rows.len() {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..rows.len() {
            if alphas[j] != 0.0 {
                quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel.eval_unchecked(rows[i].as_ref(), rows[j].as_ref());
            }
        }
    }
    Ok(alphas.iter().sum::<f64>() - 0.5 * quad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Sweep budget for the optimizer.
    pub max_passes: usize,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, kernel: KernelSpec::Linear, tol: 1e-3, max_passes: 200, seed: 42, standardize: true }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(SvmError::BadParameter("C must be > 0"));
        }
        if !(self.tol > 0.0) {
            return Err(SvmError::BadParameter("tol must be > 0"));
        }
        if self.max_passes == 0 {
            return Err(SvmError::BadParameter("max_passes must be >= 1"));
        }
        self.kernel.validate()
    }
}

/// Raw optimizer output.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective after every successful pair update, starting at 0.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Final `max_{I_up} F - min_{I_low} F`.
    pub max_violation: f64,
}

struct Smo<'a> {
    k: &'a [f64],
    y: &'a [f64],
    c: f64,
    n: usize,
    alpha: Vec<f64>,
    /// `Σ_j α_j y_j K_ij`, the decision value without bias.
    g: Vec<f64>,
    objective: f64,
}

impl Smo<'_> {
    #[inline]
    fn kk(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    /// `F_i = y_i - g_i`; the bias that puts point `i` exactly on its margin.
    #[inline]
    fn f(&self, i: usize) -> f64 {
        self.y[i] - self.g[i]
    }

    #[inline]
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 { self.alpha[i] < self.c } else { self.alpha[i] > 0.0 }
    }

    #[inline]
    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > 0.0 { self.alpha[i] > 0.0 } else { self.alpha[i] < self.c }
    }

    /// `(max_{I_up} F, min_{I_low} F)`.
    fn extremes(&self) -> (f64, f64) {
        let (mut m, mut big_m) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.n {
            let f = self.f(i);
            if self.in_up(i) && f > m {
                m = f;
            }
            if self.in_low(i) && f < big_m {
                big_m = f;
            }
        }
        (m, big_m)
    }

    /// Optimizes the pair analytically; returns whether the dual increased.
    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        // Errors without bias; the bias cancels in their difference.
        let ei = self.g[i] - yi;
        let ej = self.g[j] - yj;
        let s = yi * yj;
        let (lo, hi) = if s < 0.0 {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo <= BOUND_EPS * self.c {
            return false;
        }
        let eta = self.kk(i, i) + self.kk(j, j) - 2.0 * self.kk(i, j);
        // Gain in Q as a function of the step t = aj_new - aj.
        let gain = |t: f64| yj * (ei - ej) * t - 0.5 * eta * t * t;
        let mut aj_new = if eta > 0.0 {
            (aj + yj * (ei - ej) / eta).clamp(lo, hi)
        } else if gain(lo - aj) >= gain(hi - aj) {
            lo
        } else {
            hi
        };
        if aj_new - lo <= BOUND_EPS * self.c {
            aj_new = lo;
        } else if hi - aj_new <= BOUND_EPS * self.c {
            aj_new = hi;
        }
        // `lo` and `hi` can carry rounding residue from `aj - ai`.
        if aj_new <= BOUND_EPS * self.c {
            aj_new = 0.0;
        } else if self.c - aj_new <= BOUND_EPS * self.c {
            aj_new = self.c;
        }
        let dj = aj_new - aj;
        let improvement = gain(dj);
        if dj.abs() <= BOUND_EPS * (aj + aj_new + BOUND_EPS) || !(improvement > 0.0) {
            return false;
        }
        let mut ai_new = ai - s * dj;
        if ai_new <= BOUND_EPS * self.c {
            ai_new = 0.0;
        } else if self.c - ai_new <= BOUND_EPS * self.c {
            ai_new = self.c;
        }
        let (di, dj) = (ai_new - ai, aj_new - aj);
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        for t in 0..self.n {
            self.g[t] += di * yi * self.k[i * self.n + t] + dj * yj * self.k[j * self.n + t];
        }
        self.objective = self.alpha.iter().sum::<f64>()
            - 0.5 * self.alpha.iter().zip(self.y).zip(&self.g).map(|((a, y), g)| a * y * g).sum::<f64>();
        true
    }

    /// Whether `i` can pair with `j` to reduce a KKT violation above `tol`.
    fn violating_pair(&self, i: usize, j: usize, tol: f64) -> bool {
        let (fi, fj) = (self.f(i), self.f(j));
        (self.in_up(i) && self.in_low(j) && fi - fj > tol) || (self.in_low(i) && self.in_up(j) && fj - fi > tol)
    }

    /// Partner with the largest `|F_i - F_j|` in the violating direction.
    fn best_partner(&self, i: usize, tol: f64) -> Option<usize> {
        let fi = self.f(i);
        let mut best = None;
        let mut gap = tol;
        for j in 0..self.n {
            if j == i {
                continue;
            }
            let fj = self.f(j);
            let d = if self.in_up(i) && self.in_low(j) && fi - fj > gap {
                fi - fj
            } else if self.in_low(i) && self.in_up(j) && fj - fi > gap {
                fj - fi
            } else {
                continue;
            };
            gap = d;
            best = Some(j);
        }
        best
    }

    fn bias(&self) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..self.n {
            if self.alpha[i] > 0.0 && self.alpha[i] < self.c {
                sum += self.f(i);
                count += 1;
            }
        }
        if count > 0 {
            sum / count as f64
        } else {
            let (m, big_m) = self.extremes();
            0.5 * (m + big_m)
        }
    }
}

/// Maximizes the dual over a precomputed problem. `y` holds ±1.
pub fn solve_dual<R: AsRef<[f64]>>(
    rows: &[R],
    y: &[f64],
    c: f64,
    kernel: &KernelSpec,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<DualSolution, SvmError> {
    if rows.len() != y.len() {
        return Err(SvmError::LengthMismatch { rows: rows.len(), labels: y.len() });
    }
    check_rows(rows)?;
    check_signs(y)?;
    SvmConfig { c, kernel: *kernel, tol, max_passes, seed, standardize: false }.validate()?;

    let n = rows.len();
    let k = kernel_matrix(kernel, rows);
    let mut smo = Smo { k: &k, y, c, n, alpha: vec![0.0; n], g: vec![0.0; n], objective: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = vec![0.0];
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < max_passes {
        let (m, big_m) = smo.extremes();
        if m - big_m <= tol {
            converged = true;
            break;
        }
        sweeps += 1;
        for i in 0..n {
            let (m, big_m) = smo.extremes();
            let fi = smo.f(i);
            let violates = (smo.in_up(i) && fi - big_m > tol) || (smo.in_low(i) && m - fi > tol);
            if !violates {
                continue;
            }
            let j = rng.gen_range(0..n);
            if smo.violating_pair(i, j, tol) && smo.take_step(i, j) {
                trace.push(smo.objective);
                continue;
            }
            if let Some(j) = smo.best_partner(i, tol) {
                if smo.take_step(i, j) {
                    trace.push(smo.objective);
                    continue;
                }
            }
            let offset = rng.gen_range(0..n);
            for t in 0..n {
                let j = (offset + t) % n;
                if smo.violating_pair(i, j, tol) && smo.take_step(i, j) {
                    trace.push(smo.objective);
                    break;
                }
            }
        }
    }
    let (m, big_m) = smo.extremes();
    if !converged && m - big_m <= tol {
        converged = true;
    }
    if !converged {
        log::warn!("SMO stopped after {sweeps} sweeps with KKT violation {}", m - big_m);
    }
    let bias = smo.bias();
    Ok(DualSolution { alphas: smo.alpha, bias, objective_trace: trace, sweeps, converged, max_violation: m - big_m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub positive: Label,
    pub negative: Label,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self { positive: Label::Infected, negative: Label::Fresh }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Standardized feature values.
    pub x: Vec<f64>,
    pub y: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c_param: f64,
    pub scaler: Scaler,
    /// `Σ α_i y_i x_i`; present for the linear kernel only.
    pub weights: Option<Vec<f64>>,
    pub bias: f64,
    pub support_vectors: Vec<SupportVector>,
    pub label_map: LabelMap,
}

/// Model plus training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTraining {
    pub model: SvmModel,
    /// One dual coefficient per training row, in input order.
    pub alphas: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    /// `false` when the sweep budget ran out; the model is the last iterate.
    pub converged: bool,
}

pub fn train_svm<R: AsRef<[f64]>>(rows: &[R], labels: &[Label], config: &SvmConfig) -> Result<SvmTraining, SvmError> {
    if rows.len() != labels.len() {
        return Err(SvmError::LengthMismatch { rows: rows.len(), labels: labels.len() });
    }
    let dim = check_rows(rows)?;
    config.validate()?;
    let y = labels_to_signs(labels);
    check_signs(&y)?;
    let scaler = if config.standardize { fit_scaler(rows)? } else { Scaler::identity(dim) };
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply(r.as_ref())).collect::<Result<_, _>>()?;
    let sol = solve_dual(&scaled, &y, config.c, &config.kernel, config.tol, config.max_passes, config.seed)?;

    let support_vectors: Vec<SupportVector> = (0..rows.len())
        .filter(|&i| sol.alphas[i] > 0.0)
        .map(|i| SupportVector { x: scaled[i].clone(), y: y[i], alpha: sol.alphas[i] })
        .collect();
    let weights = matches!(config.kernel, KernelSpec::Linear).then(|| linear_weights(&support_vectors, dim));
    Ok(SvmTraining {
        model: SvmModel {
            kernel: config.kernel,
            c_param: config.c,
            scaler,
            weights,
            bias: sol.bias,
            support_vectors,
            label_map: LabelMap::default(),
        },
        alphas: sol.alphas,
        objective_trace: sol.objective_trace,
        sweeps: sol.sweeps,
        converged: sol.converged,
    })
}

/// `Σ α_i y_i x_i` over the stored support vectors.
pub fn linear_weights(support_vectors: &[SupportVector], dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    for sv in support_vectors {
        for (wk, xk) in w.iter_mut().zip(&sv.x) {
            *wk += sv.alpha * sv.y * xk;
        }
    }
    w
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        let z = self.scaler.apply(x)?;
        let raw = match &self.weights {
            Some(w) => w.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>(),
            None => self
                .support_vectors
                .iter()
                .map(|sv| sv.alpha * sv.y * self.kernel.eval_unchecked(&sv.x, &z))
                .sum::<f64>(),
        };
        Ok(raw + self.bias)
    }

    /// `+1` (positive label) when the decision value is `>= 0`.
    pub fn predict(&self, x: &[f64]) -> Result<Label, SvmError> {
        let v = self.decision_value(x)?;
        Ok(if v >= 0.0 { self.label_map.positive } else { self.label_map.negative })
    }
}

pub fn decision_value(model: &SvmModel, x: &[f64]) -> Result<f64, SvmError> {
    model.decision_value(x)
}

pub fn predict(model: &SvmModel, x: &[f64]) -> Result<Label, SvmError> {
    model.predict(x)
}
