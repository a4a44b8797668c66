//! Contrast-limited adaptive histogram equalization with a Rayleigh
//! output distribution.
//!
//! Each tile's clipped histogram CDF `Q` is mapped through
//! `p = p_min + sqrt(2 α² ln(1 / (1 - Q)))`, where `p_min` is the tile
//! minimum. Pixels blend the four surrounding tile mappings bilinearly
//! and the result is stretched affinely onto `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::raster::GrayImage;

/// Upper clamp on the cumulative probability fed to the Rayleigh transfer.
pub const MAX_CDF: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnhanceError {
    #[error("Rayleigh parameter must be positive, got {0}")]
    BadAlpha(f64),
    #[error("clip limit must lie in (0, 1], got {0}")]
    BadClipLimit(f64),
    #[error("tile grid must be at least 1x1 and histograms need >= 2 bins (got {tiles_x}x{tiles_y}, {bins} bins)")]
    BadGrid { tiles_x: usize, tiles_y: usize, bins: usize },
    #[error("a {width}x{height} image cannot be split into {tiles_x}x{tiles_y} nonempty tiles")]
    TileTooSmall { width: usize, height: usize, tiles_x: usize, tiles_y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheConfig {
    /// Per-bin cap as a fraction of the tile's pixel count.
    pub clip_limit: f64,
    pub alpha: f64,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub bins: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            clip_limit: 0.01,
            alpha: 0.04,
            tiles_x: 8,
            tiles_y: 8,
            bins: 256,
        }
    }
}

impl ClaheConfig {
    pub fn validate(&self) -> Result<(), EnhanceError> {
        if !(self.clip_limit > 0.0 && self.clip_limit <= 1.0) {
            return Err(EnhanceError::BadClipLimit(self.clip_limit));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(EnhanceError::BadAlpha(self.alpha));
        }
        if self.tiles_x == 0 || self.tiles_y == 0 || self.bins < 2 {
            return Err(EnhanceError::BadGrid {
                tiles_x: self.tiles_x,
                tiles_y: self.tiles_y,
                bins: self.bins,
            });
        }
        Ok(())
    }
}

pub fn rayleigh_transfer(q: f64, p_min: f64, alpha: f64) -> Result<f64, EnhanceError> {
    if !(alpha > 0.0) {
        return Err(EnhanceError::BadAlpha(alpha));
    }
    let q = q.clamp(0.0, MAX_CDF);
    Ok(p_min + libm::sqrt(2.0 * alpha * alpha * libm::log(1.0 / (1.0 - q))))
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Caps every bin at `limit` and spreads the removed mass evenly over all
/// bins in a single pass.
pub fn clip_histogram(hist: &mut [f64], limit: f64) {
    let mut excess = 0.0;
    for count in hist.iter_mut() {
        if *count > limit {
            excess += *count - limit;
            *count = limit;
        }
    }
    let share = excess / hist.len() as f64;
    for count in hist.iter_mut() {
        *count += share;
    }
}

/// Per-bin output intensities for one tile's pixels.
pub fn tile_transfer(values: &[f64], config: &ClaheConfig) -> Result<Vec<f64>, EnhanceError> {
    config.validate()?;
    let bins = config.bins;
    let mut hist = vec![0.0; bins];
    let mut p_min = f64::INFINITY;
    for &v in values {
        hist[bin_of(v, bins)] += 1.0;
        p_min = p_min.min(v);
    }
    if values.is_empty() {
        p_min = 0.0;
    }
    let total = values.len() as f64;
    clip_histogram(&mut hist, config.clip_limit * total);
    let mut cumulative = 0.0;
    hist.iter()
        .map(|&count| {
            cumulative += count;
            let q = if total > 0.0 { cumulative / total } else { 0.0 };
            rayleigh_transfer(q, p_min, config.alpha)
        })
        .collect()
}

/// Start offsets of `tiles` near-equal spans over `len`, plus the end.
fn tile_edges(len: usize, tiles: usize) -> Vec<usize> {
    (0..=tiles).map(|i| i * len / tiles).collect()
}

/// For each coordinate: the two neighbouring tiles and the weight of the
/// second one, interpolating between tile centers.
fn blend_plan(edges: &[usize]) -> Vec<(usize, usize, f64)> {
    let tiles = edges.len() - 1;
    let len = edges[tiles];
    let centers: Vec<f64> = (0..tiles)
        .map(|i| (edges[i] + edges[i + 1] - 1) as f64 / 2.0)
        .collect();
    (0..len)
        .map(|p| {
            let p = p as f64;
            if p <= centers[0] {
                (0, 0, 0.0)
            } else if p >= centers[tiles - 1] {
                (tiles - 1, tiles - 1, 0.0)
            } else {
                let i = centers.iter().rposition(|&c| c <= p).unwrap_or(0);
                let w = (p - centers[i]) / (centers[i + 1] - centers[i]);
                (i, i + 1, w)
            }
        })
        .collect()
}

pub fn clahe(image: &GrayImage, config: &ClaheConfig) -> Result<GrayImage, EnhanceError> {
    config.validate()?;
    let (width, height) = (image.width(), image.height());
    if width < config.tiles_x || height < config.tiles_y {
        return Err(EnhanceError::TileTooSmall {
            width,
            height,
            tiles_x: config.tiles_x,
            tiles_y: config.tiles_y,
        });
    }
    let xs = tile_edges(width, config.tiles_x);
    let ys = tile_edges(height, config.tiles_y);

    let mut maps = Vec::with_capacity(config.tiles_x * config.tiles_y);
    let mut tile_pixels = Vec::new();
    for ty in 0..config.tiles_y {
        for tx in 0..config.tiles_x {
            tile_pixels.clear();
            for y in ys[ty]..ys[ty + 1] {
                tile_pixels.extend_from_slice(&image.pixels()[y * width + xs[tx]..y * width + xs[tx + 1]]);
            }
            maps.push(tile_transfer(&tile_pixels, config)?);
        }
    }
    let map = |tx: usize, ty: usize, bin: usize| maps[ty * config.tiles_x + tx][bin];

    let col_plan = blend_plan(&xs);
    let row_plan = blend_plan(&ys);
    let mut out = Vec::with_capacity(width * height);
    for (y, &(ty0, ty1, wy)) in row_plan.iter().enumerate() {
        for (x, &(tx0, tx1, wx)) in col_plan.iter().enumerate() {
            let bin = bin_of(image.get(x, y), config.bins);
            let top = (1.0 - wx) * map(tx0, ty0, bin) + wx * map(tx1, ty0, bin);
            let bottom = (1.0 - wx) * map(tx0, ty1, bin) + wx * map(tx1, ty1, bin);
            out.push((1.0 - wy) * top + wy * bottom);
        }
    }

    let (lo, hi) = out
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi - lo > 1e-12) {
        // Every pixel mapped to the same value: keep the input intensities.
        return Ok(image.clone());
    }
    let scale = 1.0 / (hi - lo);
    for v in &mut out {
        *v = ((*v - lo) * scale).clamp(0.0, 1.0);
    }
    Ok(GrayImage::new(width, height, out).expect("stretched output lies in [0, 1]"))
}
