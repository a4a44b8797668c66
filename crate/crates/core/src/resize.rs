//! Uniform cubic B-spline interpolation and separable image resampling.
//!
//! Samples `s_0 … s_n` sit on the knots `x_i = i·h` with `h = 1`. The
//! spline is `S(x) = Σ_{i=-3}^{n-1} C_i · B₃((x - x_i) / h)`, where `B₃` is
//! the cardinal cubic B-spline supported on `[0, 4]`. Interpolation gives
//! `n + 1` conditions on the `n + 3` coefficients; the remaining two come
//! from the [`EndCondition`].

use alloc::vec;
use alloc::vec::Vec;

use crate::raster::{clamp_unit, GrayImage, RgbImage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResizeError {
    #[error("spline fitting needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("coordinate {x} is outside the spline domain [0, {max}]")]
    OutOfDomain { x: f64, max: f64 },
    #[error("target size must be at least 2x2, got {width}x{height}")]
    BadTarget { width: usize, height: usize },
}

/// Boundary constraint closing the interpolation system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndCondition {
    /// Third derivative continuous across `x_1` and `x_{n-1}`.
    #[default]
    NotAKnot,
    /// Zero second derivative at both ends.
    Natural,
}

/// Cardinal cubic B-spline, supported on `[0, 4]`.
pub fn cubic_bspline(t: f64) -> f64 {
    if !(0.0..4.0).contains(&t) {
        return 0.0;
    }
    let (piece, u) = if t < 1.0 {
        (0, t)
    } else if t < 2.0 {
        (1, t - 1.0)
    } else if t < 3.0 {
        (2, t - 2.0)
    } else {
        (3, t - 3.0)
    };
    // Piece `p` of the support is the weight of coefficient `k - p` on [x_k, x_{k+1}].
    piece_weights(u)[3 - piece]
}

/// Weights of `C_{k-3}, C_{k-2}, C_{k-1}, C_k` at local parameter `u ∈ [0, 1]`
/// within `[x_k, x_{k+1}]`.
#[inline]
fn piece_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    let v = 1.0 - u;
    [
        v * v * v / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineGrid1D {
    n: usize,
    h: f64,
    /// `coefficients[u]` holds `C_{u-3}`.
    coefficients: Vec<f64>,
}

impl SplineGrid1D {
    /// Number of knot intervals (`samples.len() - 1`).
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn knot(&self, i: isize) -> f64 {
        i as f64 * self.h
    }

    pub fn domain_end(&self) -> f64 {
        self.knot(self.n as isize)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `C_i` for `i ∈ [-3, n-1]`.
    pub fn coefficient(&self, i: isize) -> f64 {
        self.coefficients[(i + 3) as usize]
    }

    /// `B_{3,i}(x)`, the basis function attached to `C_i`.
    pub fn basis(&self, i: isize, x: f64) -> f64 {
        cubic_bspline((x - self.knot(i)) / self.h)
    }

    pub fn eval(&self, x: f64) -> Result<f64, ResizeError> {
        let max = self.domain_end();
        if !(0.0..=max).contains(&x) {
            return Err(ResizeError::OutOfDomain { x, max });
        }
        let (k, w) = locate(x / self.h, self.n);
        Ok(dot4(&self.coefficients[k..k + 4], &w))
    }
}

#[inline]
fn locate(x: f64, n: usize) -> (usize, [f64; 4]) {
    let k = (libm::floor(x) as usize).min(n - 1);
    (k, piece_weights(x - k as f64))
}

#[inline]
fn dot4(c: &[f64], w: &[f64; 4]) -> f64 {
    c[0] * w[0] + c[1] * w[1] + c[2] * w[2] + c[3] * w[3]
}

pub fn fit_spline_1d(samples: &[f64]) -> Result<SplineGrid1D, ResizeError> {
    fit_spline_1d_with(samples, EndCondition::NotAKnot)
}

pub fn fit_spline_1d_with(samples: &[f64], end: EndCondition) -> Result<SplineGrid1D, ResizeError> {
    if samples.len() < 2 {
        return Err(ResizeError::TooFewSamples(samples.len()));
    }
    let mut coefficients = vec![0.0; samples.len() + 2];
    fit_into(samples, end, &mut coefficients, &mut Scratch::default());
    Ok(SplineGrid1D {
        n: samples.len() - 1,
        h: 1.0,
        coefficients,
    })
}

#[derive(Default)]
struct Scratch {
    m: Vec<f64>,
    c_prime: Vec<f64>,
}

/// Writes the `n + 3` coefficients for `samples` into `out`.
///
/// Solves for the knot second derivatives `M_k` first (a tridiagonal
/// system), then uses `S(x_k) = (C_{k-3} + 4C_{k-2} + C_{k-1}) / 6` and
/// `S''(x_k) = C_{k-3} - 2C_{k-2} + C_{k-1}` to read off `C_{k-2}`.
fn fit_into(s: &[f64], end: EndCondition, out: &mut [f64], scratch: &mut Scratch) {
    let n = s.len() - 1;
    let m = &mut scratch.m;
    m.clear();
    m.resize(n + 1, 0.0);
    match n {
        1 => {}
        2 => {
            let d2 = s[0] - 2.0 * s[1] + s[2];
            match end {
                // Single parabola through the three samples.
                EndCondition::NotAKnot => m.fill(d2),
                EndCondition::Natural => m[1] = 1.5 * d2,
            }
        }
        _ => {
            // Unknowns M_1 … M_{n-1}; rows are M_{i-1} + 4M_i + M_{i+1} = 6Δ²s_i.
            // Not-a-knot eliminates M_0 = 2M_1 - M_2 (and symmetrically at the
            // right end), which turns the first and last rows into 6M_i = rhs.
            let rows = n - 1;
            let (edge_diag, edge_off) = match end {
                EndCondition::NotAKnot => (6.0, 0.0),
                EndCondition::Natural => (4.0, 1.0),
            };
            let c_prime = &mut scratch.c_prime;
            c_prime.clear();
            c_prime.resize(rows, 0.0);
            // Forward sweep of the Thomas algorithm, writing d' into m[1..n].
            for r in 0..rows {
                let i = r + 1;
                let rhs = 6.0 * (s[i - 1] - 2.0 * s[i] + s[i + 1]);
                let (lower, diag, upper) = if rows == 1 {
                    (0.0, edge_diag, 0.0)
                } else if r == 0 {
                    (0.0, edge_diag, edge_off)
                } else if r == rows - 1 {
                    (edge_off, edge_diag, 0.0)
                } else {
                    (1.0, 4.0, 1.0)
                };
                let (prev_c, prev_d) = if r == 0 { (0.0, 0.0) } else { (c_prime[r - 1], m[i - 1]) };
                let denom = diag - lower * prev_c;
                c_prime[r] = upper / denom;
                m[i] = (rhs - lower * prev_d) / denom;
            }
            for r in (0..rows.saturating_sub(1)).rev() {
                let i = r + 1;
                m[i] -= c_prime[r] * m[i + 1];
            }
            if end == EndCondition::NotAKnot {
                m[0] = 2.0 * m[1] - m[2];
                m[n] = 2.0 * m[n - 1] - m[n - 2];
            }
        }
    }
    for k in 0..=n {
        out[k + 1] = s[k] - m[k] / 6.0;
    }
    out[0] = 6.0 * s[0] - 4.0 * out[1] - out[2];
    out[n + 2] = 6.0 * s[n] - 4.0 * out[n + 1] - out[n];
}

pub fn eval_spline_1d(spline: &SplineGrid1D, x: f64) -> Result<f64, ResizeError> {
    spline.eval(x)
}

/// Sample positions of an `len → target` resampling with aligned end points.
fn sample_plan(len: usize, target: usize) -> Vec<(usize, [f64; 4])> {
    let n = len - 1;
    let scale = n as f64 / (target - 1) as f64;
    (0..target)
        .map(|j| {
            let x = if j == target - 1 { n as f64 } else { j as f64 * scale };
            locate(x, n)
        })
        .collect()
}

/// Resamples one row-major plane: rows first, then columns.
fn resample_plane(src: &[f64], width: usize, height: usize, tw: usize, th: usize) -> Vec<f64> {
    let end = EndCondition::NotAKnot;
    let mut scratch = Scratch::default();

    // Width pass: height × tw.
    let mut mid = vec![0.0; height * tw];
    if width == 1 {
        for y in 0..height {
            mid[y * tw..(y + 1) * tw].fill(src[y]);
        }
    } else {
        let plan = sample_plan(width, tw);
        let mut coef = vec![0.0; width + 2];
        for y in 0..height {
            fit_into(&src[y * width..(y + 1) * width], end, &mut coef, &mut scratch);
            let row = &mut mid[y * tw..(y + 1) * tw];
            for (out, (k, w)) in row.iter_mut().zip(&plan) {
                *out = dot4(&coef[*k..*k + 4], w);
            }
        }
    }

    // Height pass: th × tw.
    let mut out = vec![0.0; th * tw];
    if height == 1 {
        for y in 0..th {
            out[y * tw..(y + 1) * tw].copy_from_slice(&mid[..tw]);
        }
    } else {
        let plan = sample_plan(height, th);
        let mut column = vec![0.0; height];
        let mut coef = vec![0.0; height + 2];
        for x in 0..tw {
            for (y, v) in column.iter_mut().enumerate() {
                *v = mid[y * tw + x];
            }
            fit_into(&column, end, &mut coef, &mut scratch);
            for (y, (k, w)) in plan.iter().enumerate() {
                out[y * tw + x] = dot4(&coef[*k..*k + 4], w);
            }
        }
    }
    for v in &mut out {
        *v = clamp_unit(*v);
    }
    out
}

fn check_target(width: usize, height: usize) -> Result<(), ResizeError> {
    if width < 2 || height < 2 {
        Err(ResizeError::BadTarget { width, height })
    } else {
        Ok(())
    }
}

/// Separable not-a-knot cubic B-spline resampling of each channel.
/// Source and target corner pixels are aligned, so resizing to the same
/// size reproduces the input.
pub fn resize_image(image: &RgbImage, width: usize, height: usize) -> Result<RgbImage, ResizeError> {
    check_target(width, height)?;
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let src: Vec<f64> = image.pixels().iter().map(|p| p[c]).collect();
            resample_plane(&src, image.width(), image.height(), width, height)
        })
        .collect();
    let pixels = (0..width * height)
        .map(|i| [planes[0][i], planes[1][i], planes[2][i]])
        .collect();
    Ok(RgbImage::new(width, height, pixels).expect("resampled plane is clamped and sized"))
}

pub fn resize_gray(image: &GrayImage, width: usize, height: usize) -> Result<GrayImage, ResizeError> {
    check_target(width, height)?;
    let out = resample_plane(image.pixels(), image.width(), image.height(), width, height);
    Ok(GrayImage::new(width, height, out).expect("resampled plane is clamped and sized"))
}
