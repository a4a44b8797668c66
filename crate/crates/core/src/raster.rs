//! Raster types shared by every stage.
//!
//! Channels are stored as `f64` in `[0, 1]`; quantization to 8 bits only
//! happens when images are read from or written to disk.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("expected {expected} pixels for the given dimensions, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("pixel {index} has a value outside [0, 1]: {value}")]
    OutOfRange { index: usize, value: f64 },
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::EmptyDimensions { width, height });
    }
    let expected = width * height;
    if len != expected {
        return Err(RasterError::LengthMismatch { expected, actual: len });
    }
    Ok(())
}

fn check_unit(index: usize, value: f64) -> Result<(), RasterError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RasterError::OutOfRange { index, value })
    }
}

pub type Rgb = [f64; 3];

/// Row-major RGB raster with channels normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, RasterError> {
        check_dims(width, height, pixels.len())?;
        for (i, px) in pixels.iter().enumerate() {
            for &c in px {
                check_unit(i, c)?;
            }
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from a generator, clamping every channel into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Rgb,
    ) -> Result<Self, RasterError> {
        check_dims(width, height, width * height)?;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).map(clamp_unit));
            }
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Extracts one channel as a gray raster (used for per-channel resampling).
    pub fn channel(&self, c: usize) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| p[c]).collect(),
        }
    }

    /// Reassembles an image from three equally-sized channel planes.
    pub fn from_channels(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<Self, RasterError> {
        check_dims(r.width, r.height, g.pixels.len())?;
        check_dims(r.width, r.height, b.pixels.len())?;
        let pixels = r
            .pixels
            .iter()
            .zip(&g.pixels)
            .zip(&b.pixels)
            .map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Self::new(r.width, r.height, pixels)
    }
}

/// Row-major single-channel raster, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, RasterError> {
        check_dims(width, height, pixels.len())?;
        for (i, &v) in pixels.iter().enumerate() {
            check_unit(i, v)?;
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, RasterError> {
        check_dims(width, height, width * height)?;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(clamp_unit(f(x, y)));
            }
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Replicates the intensity into all three channels.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }
}

/// Region selector; `true` marks a selected pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn full(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, RasterError> {
        check_dims(width, height, width * height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Intensities of the selected pixels in row-major order.
    pub fn select(&self, image: &GrayImage) -> Vec<f64> {
        debug_assert_eq!((self.width, self.height), (image.width, image.height));
        self.bits
            .iter()
            .zip(&image.pixels)
            .filter(|(&b, _)| b)
            .map(|(_, &v)| v)
            .collect()
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[inline]
pub fn luma(px: Rgb) -> f64 {
    // Weights sum to one; gray pixels are returned as-is so rounding in the
    // weighted sum cannot move them.
    if px[0] == px[1] && px[1] == px[2] {
        return px[0];
    }
    clamp_unit(LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2])
}

/// Rec. 601 luma.
pub fn to_gray(image: &RgbImage) -> GrayImage {
    GrayImage {
        width: image.width,
        height: image.height,
        pixels: image.pixels.iter().map(|&p| luma(p)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gray_of_primaries() {
        let img = RgbImage::new(3, 1, vec![[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let g = to_gray(&img);
        assert_eq!(g.pixels()[0], 1.0);
        assert_eq!(g.pixels()[1], 0.0);
        assert!((g.pixels()[2] - 0.299).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rasters() {
        assert!(matches!(
            RgbImage::new(0, 3, vec![]),
            Err(RasterError::EmptyDimensions { .. })
        ));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(RasterError::LengthMismatch { expected: 4, actual: 3 })
        ));
        assert!(matches!(
            GrayImage::new(1, 1, vec![1.5]),
            Err(RasterError::OutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn mask_selects_in_row_major_order() {
        let img = GrayImage::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mask = BinaryMask::new(2, 2, vec![false, true, true, false]).unwrap();
        assert_eq!(mask.select(&img), vec![0.2, 0.3]);
        assert_eq!(mask.count(), 2);
    }

    proptest! {
        #[test]
        fn gray_preserves_dims_and_range(
            w in 1usize..8, h in 1usize..8,
            seed in proptest::collection::vec(0.0f64..=1.0, 192)
        ) {
            let img = RgbImage::from_fn(w, h, |x, y| {
                let i = (y * w + x) * 3;
                [seed[i], seed[i + 1], seed[i + 2]]
            }).unwrap();
            let g = to_gray(&img);
            prop_assert_eq!((g.width(), g.height()), (w, h));
            prop_assert!(g.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn gray_axis_is_fixed(v in 0.0f64..=1.0) {
            prop_assert_eq!(luma([v, v, v]), v);
        }
    }
}
