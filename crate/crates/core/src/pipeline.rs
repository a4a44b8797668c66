//! Image → feature vector: resize, enhance, convert to L\*a\*b\*, segment,
//! then measure the lesion region.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::colorspace::{rgb_image_to_lab, LabColor, LabImage, WhitePoint};
use crate::enhance::{clahe, ClaheConfig, EnhanceError};
use crate::features::{
    average_glcm, compute_glcm, glcm_features, stat_features, FeatureError, FeatureVector, GlcmAngle, StatFeatures,
};
use crate::raster::{to_gray, GrayImage, RasterError, RgbImage};
use crate::resize::{resize_image, ResizeError};
use crate::segment::{segment_lab_image, SegmentConfig, SegmentError, SegmentationResult};

/// Where contrast enhancement runs relative to the color conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhanceOrder {
    /// CLAHE on the luma of the resized RGB image; RGB is rescaled by the
    /// per-pixel luma gain before conversion.
    #[default]
    BeforeConversion,
    /// CLAHE on `L*/100` after conversion.
    AfterConversion,
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub width: usize,
    pub height: usize,
    pub clahe: ClaheConfig,
    pub enhance_order: EnhanceOrder,
    pub white_point: WhitePoint,
    pub segment: SegmentConfig,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            width: 600,
            height: 250,
            clahe: ClaheConfig::default(),
            enhance_order: EnhanceOrder::BeforeConversion,
            white_point: WhitePoint::default(),
            segment: SegmentConfig::default(),
            glcm_levels: 16,
            glcm_distance: 1,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.width == 0 || self.height == 0 {
            return Err(PipelineError::BadConfig("target size must be at least 1x1"));
        }
        if self.enhance_order != EnhanceOrder::Disabled {
            self.clahe.validate()?;
        }
        if self.glcm_levels < 2 || self.glcm_distance == 0 {
            return Err(PipelineError::BadConfig("GLCM needs >= 2 levels and distance >= 1"));
        }
        if self.segment.k == 0 {
            return Err(PipelineError::BadConfig("segmentation needs k >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("resize failed: {0}")]
    Resize(#[from] ResizeError),
    #[error("enhancement failed: {0}")]
    Enhance(#[from] EnhanceError),
    #[error("segmentation failed: {0}")]
    Segment(#[from] SegmentError),
    #[error("feature extraction failed: {0}")]
    Feature(#[from] FeatureError),
    #[error("raster error: {0}")]
    Raster(#[from] RasterError),
    #[error("lesion mask has {pixels} pixel(s); at least 2 are needed")]
    SegmentationEmpty { pixels: usize },
}

/// Features whose value was substituted because it was undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Substitutions {
    /// Constant region: kurtosis and skewness set to 0.
    pub moments: bool,
    /// Zero-spread GLCM marginal: correlation set to 0.
    pub correlation: bool,
}

/// Feature vector plus every intermediate stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub resized: RgbImage,
    pub enhanced: RgbImage,
    /// Grayscale the region statistics are measured on.
    pub gray: GrayImage,
    pub segmentation: SegmentationResult,
    pub substitutions: Substitutions,
}

/// Scales each pixel by `after / before` of its gray value; pixels with a
/// zero gray value become neutral gray.
fn apply_gain(image: &RgbImage, before: &GrayImage, after: &GrayImage) -> RgbImage {
    let pixels = image
        .pixels()
        .iter()
        .zip(before.pixels().iter().zip(after.pixels()))
        .map(|(px, (&y0, &y1))| {
            if y0 > 0.0 {
                let g = y1 / y0;
                [(px[0] * g).min(1.0), (px[1] * g).min(1.0), (px[2] * g).min(1.0)]
            } else {
                [y1; 3]
            }
        })
        .collect();
    RgbImage::new(image.width(), image.height(), pixels).expect("gain keeps pixels in [0, 1]")
}

fn enhance(resized: &RgbImage, config: &ExtractionConfig) -> Result<(RgbImage, GrayImage, LabImage), PipelineError> {
    match config.enhance_order {
        EnhanceOrder::Disabled => Ok((resized.clone(), to_gray(resized), rgb_image_to_lab(resized, config.white_point))),
        EnhanceOrder::BeforeConversion => {
            let gray = to_gray(resized);
            let eq = clahe(&gray, &config.clahe)?;
            let enhanced = apply_gain(resized, &gray, &eq);
            let lab = rgb_image_to_lab(&enhanced, config.white_point);
            Ok((enhanced, eq, lab))
        }
        EnhanceOrder::AfterConversion => {
            let lab = rgb_image_to_lab(resized, config.white_point);
            let lightness = GrayImage::from_fn(lab.width(), lab.height(), |x, y| lab.get(x, y).l / 100.0)?;
            let eq = clahe(&lightness, &config.clahe)?;
            let pixels: Vec<LabColor> = lab
                .pixels()
                .iter()
                .zip(eq.pixels())
                .map(|(p, &l)| LabColor { l: 100.0 * l, a: p.a, b: p.b })
                .collect();
            let lab = LabImage::new(lab.width(), lab.height(), pixels)?;
            let enhanced = apply_gain(resized, &to_gray(resized), &eq);
            Ok((enhanced, eq, lab))
        }
    }
}

/// Runs every stage and keeps the intermediates.
pub fn extract(rgb: &RgbImage, config: &ExtractionConfig) -> Result<Extraction, PipelineError> {
    config.validate()?;
    let resized = resize_image(rgb, config.width, config.height)?;
    let (enhanced, gray, lab) = enhance(&resized, config)?;
    let segmentation = segment_lab_image(&lab, &config.segment)?;
    let mask = &segmentation.mask;
    if mask.count() < 2 {
        return Err(PipelineError::SegmentationEmpty { pixels: mask.count() });
    }

    let mut substitutions = Substitutions::default();
    let intensities = mask.select(&gray);
    let stats = match stat_features(&intensities) {
        Ok(s) => s,
        Err(FeatureError::DegenerateRegion { mean }) => {
            log::warn!("lesion region is constant ({mean}); kurtosis and skewness set to 0");
            substitutions.moments = true;
            StatFeatures::constant(mean)
        }
        Err(e) => return Err(e.into()),
    };

    let mut glcms = Vec::with_capacity(4);
    for angle in GlcmAngle::ALL {
        match compute_glcm(&gray, mask, config.glcm_levels, config.glcm_distance, angle) {
            Ok(g) => glcms.push(g),
            Err(FeatureError::NoValidPairs { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let glcm = average_glcm(&glcms).ok_or(FeatureError::NoValidPairs { distance: config.glcm_distance })?;
    let texture = glcm_features(&glcm);
    substitutions.correlation = !texture.correlation_defined;

    Ok(Extraction {
        features: FeatureVector::from_parts(&stats, &texture)?,
        resized,
        enhanced,
        gray,
        segmentation,
        substitutions,
    })
}

pub fn extract_feature_vector(rgb: &RgbImage, config: &ExtractionConfig) -> Result<FeatureVector, PipelineError> {
    extract(rgb, config).map(|e| e.features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{apply_augment, AugmentOp};
    use crate::features::FEATURE_COUNT;
    use crate::raster::luma;

    fn small_config() -> ExtractionConfig {
        ExtractionConfig {
            width: 64,
            height: 32,
            clahe: ClaheConfig { tiles_x: 8, tiles_y: 4, ..ClaheConfig::default() },
            ..ExtractionConfig::default()
        }
    }

    /// Gray body on a dark background with a red patch in a known place.
    fn lesion_fixture() -> (RgbImage, Vec<(usize, usize)>) {
        let mut lesion = Vec::new();
        let img = RgbImage::from_fn(64, 32, |x, y| {
            let in_patch = (20..30).contains(&x) && (10..18).contains(&y);
            if in_patch {
                lesion.push((x, y));
                let t = ((x * 3 + y * 5) % 7) as f64 / 60.0;
                [0.75 + t, 0.15, 0.15 + t]
            } else if (4..60).contains(&x) && (4..28).contains(&y) {
                [0.5, 0.5, 0.52]
            } else {
                [0.1, 0.1, 0.12]
            }
        })
        .unwrap();
        (img, lesion)
    }

    #[test]
    fn lesion_region_statistics() {
        let (img, lesion) = lesion_fixture();
        let config = ExtractionConfig { enhance_order: EnhanceOrder::Disabled, ..small_config() };
        let e = extract(&img, &config).unwrap();
        let mask = &e.segmentation.mask;
        assert_eq!(mask.count(), lesion.len());
        for &(x, y) in &lesion {
            assert!(mask.get(x, y));
        }
        // Identity resize keeps the fixture pixels, so the gray values are the luma.
        let vals: Vec<f64> = lesion.iter().map(|&(x, y)| luma(img.get(x, y))).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let f = e.features.values();
        assert!((f[0] - mean).abs() < 1e-6, "{} vs {mean}", f[0]);
        assert!((f[1] - sd).abs() < 1e-6);
        assert_eq!(f.len(), FEATURE_COUNT);
    }

    #[test]
    fn constant_image_uses_substitutions() {
        let img = RgbImage::filled(40, 20, [0.4; 3]).unwrap();
        match extract(&img, &small_config()) {
            Ok(e) => {
                let f = e.features.values();
                assert!((f[0] - 0.4).abs() < 1e-9);
                assert_eq!((f[1], f[3], f[4]), (0.0, 0.0, 0.0));
                assert!(e.substitutions.moments && e.substitutions.correlation);
            }
            Err(e) => assert!(matches!(e, PipelineError::SegmentationEmpty { .. }), "{e}"),
        }
    }

    #[test]
    fn horizontal_flip_invariance() {
        let (img, _) = lesion_fixture();
        let flipped = apply_augment(&img, &AugmentOp::FlipH).unwrap();
        for order in [EnhanceOrder::BeforeConversion, EnhanceOrder::AfterConversion, EnhanceOrder::Disabled] {
            let config = ExtractionConfig { width: 96, height: 40, enhance_order: order, ..small_config() };
            let a = extract_feature_vector(&img, &config).unwrap();
            let b = extract_feature_vector(&flipped, &config).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-9, "{order:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn stages_have_target_size() {
        let (img, _) = lesion_fixture();
        let config = ExtractionConfig { width: 80, height: 24, ..small_config() };
        let e = extract(&img, &config).unwrap();
        for (w, h) in [
            (e.resized.width(), e.resized.height()),
            (e.enhanced.width(), e.enhanced.height()),
            (e.gray.width(), e.gray.height()),
            (e.segmentation.width, e.segmentation.height),
        ] {
            assert_eq!((w, h), (80, 24));
        }
    }

    #[test]
    fn bad_config_rejected() {
        let (img, _) = lesion_fixture();
        let config = ExtractionConfig { glcm_levels: 1, ..small_config() };
        assert!(matches!(extract(&img, &config), Err(PipelineError::BadConfig(_))));
        let config = ExtractionConfig { width: 0, ..small_config() };
        assert!(matches!(extract(&img, &config), Err(PipelineError::BadConfig(_))));
    }
}
