//! Region statistics and gray-level co-occurrence texture features.
//!
//! The classifier input is the ten-vector
//! `(μ, σ, σ², κ, γ, contrast, correlation, energy, entropy, homogeneity)`
//! computed over the pixels of the segmented lesion region.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::raster::{BinaryMask, GrayImage};

/// Histogram resolution used to locate the mode.
pub const MODE_BINS: usize = 256;

/// Standard deviations at or below this are treated as a constant region;
/// resampling leaves rounding noise of order 1e-14 on flat input.
pub const DEGENERATE_STD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("region statistics need at least 2 pixels, got {0}")]
    RegionTooSmall(usize),
    #[error("region is constant (mean {mean}); kurtosis and skewness are undefined")]
    DegenerateRegion { mean: f64 },
    #[error("region is empty")]
    EmptyRegion,
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("no pixel pair inside the mask at distance {distance}")]
    NoValidPairs { distance: usize },
    #[error("GLCM needs >= 2 gray levels and distance >= 1 (got {levels}, {distance})")]
    BadGlcmParameters { levels: usize, distance: usize },
    #[error("mask is {mask_width}x{mask_height} but the image is {width}x{height}")]
    MaskMismatch { mask_width: usize, mask_height: usize, width: usize, height: usize },
    #[error("feature {index} is not finite: {value}")]
    NonFinite { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatFeatures {
    pub mean: f64,
    pub std_dev: f64,
    pub variance: f64,
    /// Excess kurtosis (normal = 0).
    pub kurtosis: f64,
    /// Pearson mode skewness `(μ - mode) / σ`.
    pub skewness: f64,
}

impl StatFeatures {
    /// Statistics of a constant region, with kurtosis and skewness set to 0.
    pub fn constant(mean: f64) -> Self {
        Self { mean, std_dev: 0.0, variance: 0.0, kurtosis: 0.0, skewness: 0.0 }
    }
}

/// Center of the most populated of [`MODE_BINS`] equal bins over `[0, 1]`.
pub fn mode_intensity(values: &[f64]) -> Result<f64, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyRegion);
    }
    let mut hist = [0usize; MODE_BINS];
    for &v in values {
        hist[mode_bin(v)] += 1;
    }
    let mut best = 0;
    for (i, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = i;
        }
    }
    Ok((best as f64 + 0.5) / MODE_BINS as f64)
}

#[inline]
fn mode_bin(v: f64) -> usize {
    let b = libm::floor(v * MODE_BINS as f64);
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(MODE_BINS - 1)
    }
}

/// Population moments of the region intensities.
pub fn stat_features(values: &[f64]) -> Result<StatFeatures, FeatureError> {
    if values.len() < 2 {
        return Err(FeatureError::RegionTooSmall(values.len()));
    }
    let p = values.len() as f64;
    let mean = values.iter().sum::<f64>() / p;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= p;
    m4 /= p;
    let std_dev = libm::sqrt(m2);
    if std_dev <= DEGENERATE_STD {
        return Err(FeatureError::DegenerateRegion { mean });
    }
    let mode = mode_intensity(values)?;
    Ok(StatFeatures {
        mean,
        std_dev,
        variance: m2,
        kurtosis: m4 / (m2 * m2) - 3.0,
        skewness: (mean - mode) / std_dev,
    })
}

/// Pixel-pair direction for co-occurrence counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlcmAngle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl GlcmAngle {
    pub const ALL: [GlcmAngle; 4] = [GlcmAngle::Deg0, GlcmAngle::Deg45, GlcmAngle::Deg90, GlcmAngle::Deg135];

    /// `(dx, dy)` in image coordinates (y grows downwards).
    pub fn offset(self, distance: usize) -> (isize, isize) {
        let d = distance as isize;
        match self {
            GlcmAngle::Deg0 => (d, 0),
            GlcmAngle::Deg45 => (d, -d),
            GlcmAngle::Deg90 => (0, -d),
            GlcmAngle::Deg135 => (-d, -d),
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            GlcmAngle::Deg0 => 0,
            GlcmAngle::Deg45 => 45,
            GlcmAngle::Deg90 => 90,
            GlcmAngle::Deg135 => 135,
        }
    }
}

/// Normalized, symmetric co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    distance: usize,
    /// `None` for a matrix averaged over several angles.
    angle: Option<GlcmAngle>,
    matrix: Vec<f64>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn angle(&self) -> Option<GlcmAngle> {
        self.angle
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.matrix
    }

    /// Builds a matrix from raw non-negative weights, symmetrizing and
    /// normalizing them. Returns `None` if the weights sum to zero.
    pub fn from_counts(levels: usize, distance: usize, counts: &[f64]) -> Option<Self> {
        assert_eq!(counts.len(), levels * levels);
        let mut matrix = vec![0.0; levels * levels];
        for i in 0..levels {
            for j in 0..levels {
                matrix[i * levels + j] = counts[i * levels + j] + counts[j * levels + i];
            }
        }
        let total: f64 = matrix.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        for v in &mut matrix {
            *v /= total;
        }
        Some(Self { levels, distance, angle: None, matrix })
    }
}

#[inline]
fn quantize(v: f64, levels: usize) -> usize {
    let q = libm::floor(v * levels as f64);
    if q <= 0.0 {
        0
    } else {
        (q as usize).min(levels - 1)
    }
}

pub fn compute_glcm(
    image: &GrayImage,
    mask: &BinaryMask,
    levels: usize,
    distance: usize,
    angle: GlcmAngle,
) -> Result<Glcm, FeatureError> {
    if levels < 2 || distance == 0 {
        return Err(FeatureError::BadGlcmParameters { levels, distance });
    }
    let (w, h) = (image.width(), image.height());
    if (mask.width(), mask.height()) != (w, h) {
        return Err(FeatureError::MaskMismatch {
            mask_width: mask.width(),
            mask_height: mask.height(),
            width: w,
            height: h,
        });
    }
    if mask.count() == 0 {
        return Err(FeatureError::EmptyMask);
    }
    let (dx, dy) = angle.offset(distance);
    let mut counts = vec![0.0; levels * levels];
    let mut pairs = 0usize;
    for y in 0..h {
        let y2 = y as isize + dy;
        if y2 < 0 || y2 >= h as isize {
            continue;
        }
        for x in 0..w {
            let x2 = x as isize + dx;
            if x2 < 0 || x2 >= w as isize || !mask.get(x, y) || !mask.get(x2 as usize, y2 as usize) {
                continue;
            }
            let a = quantize(image.get(x, y), levels);
            let b = quantize(image.get(x2 as usize, y2 as usize), levels);
            counts[a * levels + b] += 1.0;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(FeatureError::NoValidPairs { distance });
    }
    let mut glcm = Glcm::from_counts(levels, distance, &counts).expect("at least one pair counted");
    glcm.angle = Some(angle);
    Ok(glcm)
}

/// Entry-wise mean of same-sized matrices.
pub fn average_glcm(glcms: &[Glcm]) -> Option<Glcm> {
    let first = glcms.first()?;
    let mut matrix = vec![0.0; first.matrix.len()];
    for g in glcms {
        assert_eq!(g.levels, first.levels, "GLCM level counts differ");
        for (m, v) in matrix.iter_mut().zip(&g.matrix) {
            *m += v;
        }
    }
    let n = glcms.len() as f64;
    for m in &mut matrix {
        *m /= n;
    }
    Some(Glcm { levels: first.levels, distance: first.distance, angle: None, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub entropy: f64,
    pub homogeneity: f64,
    /// `false` when a marginal has zero spread and correlation was set to 0.
    pub correlation_defined: bool,
}

pub fn glcm_features(glcm: &Glcm) -> GlcmFeatures {
    let n = glcm.levels;
    let (mut contrast, mut energy, mut entropy, mut homogeneity) = (0.0, 0.0, 0.0, 0.0);
    let (mut mu_a, mut mu_b, mut cross) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let m = glcm.get(i, j);
            if m == 0.0 {
                continue;
            }
            let (fi, fj) = (i as f64, j as f64);
            let d = fi - fj;
            contrast += d * d * m;
            energy += m * m;
            entropy -= m * libm::log(m);
            homogeneity += m / (1.0 + d * d);
            mu_a += fi * m;
            mu_b += fj * m;
            cross += fi * fj * m;
        }
    }
    let (mut var_a, mut var_b) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let m = glcm.get(i, j);
            var_a += (i as f64 - mu_a) * (i as f64 - mu_a) * m;
            var_b += (j as f64 - mu_b) * (j as f64 - mu_b) * m;
        }
    }
    let spread = libm::sqrt(var_a) * libm::sqrt(var_b);
    let (correlation, correlation_defined) = if spread > 1e-15 {
        ((cross - mu_a * mu_b) / spread, true)
    } else {
        log::warn!("GLCM marginal has zero variance; correlation set to 0");
        (0.0, false)
    };
    GlcmFeatures { contrast, correlation, energy, entropy, homogeneity, correlation_defined }
}

pub const FEATURE_COUNT: usize = 10;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mean",
    "std_dev",
    "variance",
    "kurtosis",
    "skewness",
    "contrast",
    "correlation",
    "energy",
    "entropy",
    "homogeneity",
];

/// The ten classifier inputs in their fixed order (see [`FEATURE_NAMES`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self, FeatureError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(FeatureError::NonFinite { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn from_parts(stats: &StatFeatures, texture: &GlcmFeatures) -> Result<Self, FeatureError> {
        Self::new([
            stats.mean,
            stats.std_dev,
            stats.variance,
            stats.kurtosis,
            stats.skewness,
            texture.contrast,
            texture.correlation,
            texture.energy,
            texture.entropy,
            texture.homogeneity,
        ])
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, v)) in FEATURE_NAMES.iter().zip(self.0).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={v:.6}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook two-pass moments, written out independently.
    fn naive_moments(values: &[f64]) -> (f64, f64, f64) {
        let n = values.len() as f64;
        let mut mean = 0.0;
        for v in values {
            mean += v;
        }
        mean /= n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let fourth = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        (mean, var, fourth / (var * var) - 3.0)
    }

    #[test]
    fn small_region_moments() {
        let s = stat_features(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((s.mean - 0.25).abs() < 1e-12);
        assert!((s.variance - 0.0125).abs() < 1e-12);
        assert!((s.std_dev - 0.111803).abs() < 1e-6);
        assert!((s.variance - s.std_dev * s.std_dev).abs() < 1e-15);
    }

    #[test]
    fn constant_and_tiny_regions() {
        assert_eq!(
            stat_features(&[0.5, 0.5, 0.5]),
            Err(FeatureError::DegenerateRegion { mean: 0.5 })
        );
        assert_eq!(stat_features(&[0.5]), Err(FeatureError::RegionTooSmall(1)));
    }

    #[test]
    fn two_value_kurtosis() {
        for (a, b) in [(0.0, 1.0), (0.25, 0.5), (0.9, 0.1), (0.3, 0.7)] {
            let s = stat_features(&[a, a, b, b]).unwrap();
            assert_eq!(s.kurtosis, -2.0, "a={a} b={b}");
        }
    }

    #[test]
    fn mode_bins() {
        let m = mode_intensity(&[0.1, 0.1, 0.9]).unwrap();
        assert_eq!(m, (25.0 + 0.5) / 256.0);
        let spread: Vec<f64> = (0..10).map(|i| 0.05 + i as f64 * 0.1).collect();
        assert_eq!(mode_intensity(&spread).unwrap(), (12.0 + 0.5) / 256.0);
        // 0.30 and 0.301 both land in bin 76.
        assert_eq!(mode_intensity(&[0.30, 0.301, 0.9, 0.91]).unwrap(), 76.5 / 256.0);
        assert_eq!(mode_intensity(&[]), Err(FeatureError::EmptyRegion));
    }

    /// Standard normal quantile by bisection on the CDF.
    fn normal_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * libm::erfc(-mid / core::f64::consts::SQRT_2) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_sample_has_zero_excess_kurtosis() {
        let n = 10_000;
        let mut values: Vec<f64> =
            (0..n).map(|i| 0.5 + 0.1 * normal_quantile((i as f64 + 0.5) / n as f64)).collect();
        // Shuffle so the order carries no structure.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in (1..n).rev() {
            values.swap(i, rng.gen_range(0..=i));
        }
        let s = stat_features(&values).unwrap();
        assert!(s.kurtosis.abs() <= 0.15, "kurtosis {}", s.kurtosis);
        assert!(s.skewness.abs() <= 0.15, "skewness {}", s.skewness);
    }

    #[test]
    fn constant_region_glcm() {
        let img = GrayImage::filled(5, 5, 0.4).unwrap();
        let mask = BinaryMask::full(5, 5).unwrap();
        let g = compute_glcm(&img, &mask, 16, 1, GlcmAngle::Deg0).unwrap();
        let q = quantize(0.4, 16);
        assert_eq!(g.get(q, q), 1.0);
        assert_eq!(g.entries().iter().filter(|&&v| v != 0.0).count(), 1);
        let f = glcm_features(&g);
        assert_eq!((f.contrast, f.energy, f.homogeneity, f.entropy), (0.0, 1.0, 1.0, 0.0));
        assert_eq!(f.correlation, 0.0);
        assert!(!f.correlation_defined);
    }

    #[test]
    fn alternating_row() {
        let img = GrayImage::new(4, 1, vec![0.0, 0.9, 0.0, 0.9]).unwrap();
        let mask = BinaryMask::full(4, 1).unwrap();
        let g = compute_glcm(&img, &mask, 2, 1, GlcmAngle::Deg0).unwrap();
        assert_eq!((g.get(0, 1), g.get(1, 0), g.get(0, 0), g.get(1, 1)), (0.5, 0.5, 0.0, 0.0));
        let f = glcm_features(&g);
        assert_eq!((f.contrast, f.homogeneity, f.energy), (1.0, 0.5, 0.5));
    }

    #[test]
    fn uniform_matrix_maximizes_entropy() {
        let levels = 8;
        let g = Glcm::from_counts(levels, 1, &vec![1.0; levels * levels]).unwrap();
        let f = glcm_features(&g);
        let n2 = (levels * levels) as f64;
        assert!((f.energy - 1.0 / n2).abs() < 1e-15);
        assert!((f.entropy - n2.ln()).abs() < 1e-12);
    }

    #[test]
    fn glcm_errors() {
        let img = GrayImage::filled(3, 3, 0.5).unwrap();
        let one = BinaryMask::from_fn(3, 3, |x, y| x == 1 && y == 1).unwrap();
        assert_eq!(
            compute_glcm(&img, &one, 16, 1, GlcmAngle::Deg0),
            Err(FeatureError::NoValidPairs { distance: 1 })
        );
        let none = BinaryMask::new(3, 3, vec![false; 9]).unwrap();
        assert_eq!(compute_glcm(&img, &none, 16, 1, GlcmAngle::Deg0), Err(FeatureError::EmptyMask));
        let full = BinaryMask::full(3, 3).unwrap();
        assert!(matches!(
            compute_glcm(&img, &full, 1, 1, GlcmAngle::Deg0),
            Err(FeatureError::BadGlcmParameters { .. })
        ));
    }

    #[test]
    fn diagonal_pairs_use_both_axes() {
        // Two pixels on an anti-diagonal only pair up at 45°.
        let img = GrayImage::new(2, 2, vec![0.0, 0.9, 0.0, 0.0]).unwrap();
        let mask = BinaryMask::new(2, 2, vec![false, true, true, false]).unwrap();
        assert!(compute_glcm(&img, &mask, 2, 1, GlcmAngle::Deg45).is_ok());
        assert!(compute_glcm(&img, &mask, 2, 1, GlcmAngle::Deg135).is_err());
    }

    fn image_and_mask() -> impl Strategy<Value = (GrayImage, BinaryMask)> {
        (2usize..12, 2usize..12).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(0.0f64..=1.0, w * h),
                proptest::collection::vec(proptest::bool::weighted(0.7), w * h),
            )
                .prop_map(move |(px, bits)| {
                    (GrayImage::new(w, h, px).unwrap(), BinaryMask::new(w, h, bits).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn matches_naive_moments(values in proptest::collection::vec(0.0f64..=1.0, 2..300)) {
            let (mean, var, kurt) = naive_moments(&values);
            match stat_features(&values) {
                Ok(s) => {
                    prop_assert!((s.mean - mean).abs() <= 1e-12);
                    prop_assert!((s.variance - var).abs() <= 1e-12);
                    prop_assert!((s.kurtosis - kurt).abs() <= 1e-12 * kurt.abs().max(1.0));
                }
                Err(FeatureError::DegenerateRegion { .. }) => prop_assert!(var.sqrt() <= DEGENERATE_STD),
                Err(e) => prop_assert!(false, "{}", e),
            }
        }

        #[test]
        fn glcm_invariants((img, mask) in image_and_mask(), levels in 2usize..20, angle in 0usize..4) {
            let Ok(g) = compute_glcm(&img, &mask, levels, 1, GlcmAngle::ALL[angle]) else {
                return Ok(());
            };
            let sum: f64 = g.entries().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            for i in 0..levels {
                for j in 0..levels {
                    prop_assert!(g.get(i, j) >= 0.0);
                    prop_assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
            let f = glcm_features(&g);
            let off_diagonal = (0..levels).any(|i| (0..levels).any(|j| i != j && g.get(i, j) > 0.0));
            prop_assert_eq!(f.contrast == 0.0, !off_diagonal);
            let nonzero = g.entries().iter().filter(|&&v| v > 0.0).count();
            prop_assert!(f.energy > 0.0 && f.energy <= 1.0 + 1e-12);
            prop_assert_eq!((f.energy - 1.0).abs() < 1e-12, nonzero == 1);
            prop_assert!(f.homogeneity > 0.0 && f.homogeneity <= 1.0 + 1e-12);
            prop_assert!(f.entropy >= 0.0);
        }
    }
}
