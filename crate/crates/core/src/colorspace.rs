//! RGB → XYZ → CIE L\*a\*b\*.
//!
//! RGB values are used as-is (no gamma linearization). The default white
//! point is the image of RGB white under the conversion matrix, so pure
//! white lands exactly on `(100, 0, 0)` and the gray axis is neutral.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::raster::{RasterError, Rgb, RgbImage};

/// RGB → XYZ conversion matrix (rows produce X, Y, Z).
pub const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
];

/// Ratio below which the linear segments of `L*` and `f` take over.
pub const LINEAR_THRESHOLD: f64 = 0.008856;
const LINEAR_L_SLOPE: f64 = 903.3;
const LINEAR_F_SLOPE: f64 = 7.787;
const LINEAR_F_OFFSET: f64 = 16.0 / 116.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyzColor {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitePoint {
    pub xn: f64,
    pub yn: f64,
    pub zn: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("white point components must be positive, got ({xn}, {yn}, {zn})")]
pub struct InvalidWhitePoint {
    pub xn: f64,
    pub yn: f64,
    pub zn: f64,
}

impl WhitePoint {
    pub fn new(xn: f64, yn: f64, zn: f64) -> Result<Self, InvalidWhitePoint> {
        if xn > 0.0 && yn > 0.0 && zn > 0.0 {
            Ok(Self { xn, yn, zn })
        } else {
            Err(InvalidWhitePoint { xn, yn, zn })
        }
    }

    /// Row sums of [`RGB_TO_XYZ`]: `(0.950456, 1.000000, 1.088754)`.
    pub fn matrix_white() -> Self {
        let row = |r: [f64; 3]| r[0] + r[1] + r[2];
        Self {
            xn: row(RGB_TO_XYZ[0]),
            yn: row(RGB_TO_XYZ[1]),
            zn: row(RGB_TO_XYZ[2]),
        }
    }
}

impl Default for WhitePoint {
    fn default() -> Self {
        Self::matrix_white()
    }
}

pub fn rgb_to_xyz(rgb: Rgb) -> XyzColor {
    let m = &RGB_TO_XYZ;
    let dot = |row: &[f64; 3]| row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
    XyzColor {
        x: dot(&m[0]),
        y: dot(&m[1]),
        z: dot(&m[2]),
    }
}

/// The cube-root compander with its linear toe.
pub fn lab_f(t: f64) -> f64 {
    if t > LINEAR_THRESHOLD {
        libm::cbrt(t)
    } else {
        LINEAR_F_SLOPE * t + LINEAR_F_OFFSET
    }
}

pub fn lightness(y_ratio: f64) -> f64 {
    if y_ratio > LINEAR_THRESHOLD {
        116.0 * libm::cbrt(y_ratio) - 16.0
    } else {
        LINEAR_L_SLOPE * y_ratio
    }
}

pub fn xyz_to_lab(xyz: XyzColor, white: WhitePoint) -> LabColor {
    let (xr, yr, zr) = (xyz.x / white.xn, xyz.y / white.yn, xyz.z / white.zn);
    let (fx, fy, fz) = (lab_f(xr), lab_f(yr), lab_f(zr));
    LabColor {
        l: lightness(yr),
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

pub fn rgb_to_lab(rgb: Rgb, white: WhitePoint) -> LabColor {
    xyz_to_lab(rgb_to_xyz(rgb), white)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    pixels: Vec<LabColor>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, pixels: Vec<LabColor>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(RasterError::LengthMismatch { expected: width * height, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[LabColor] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> LabColor {
        self.pixels[y * self.width + x]
    }
}

pub fn rgb_image_to_lab(image: &RgbImage, white: WhitePoint) -> LabImage {
    LabImage {
        width: image.width(),
        height: image.height(),
        pixels: image.pixels().iter().map(|&p| rgb_to_lab(p, white)).collect(),
    }
}
