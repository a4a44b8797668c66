//! Synthetic fish photographs for end-to-end tests and demos.
//!
//! A fish is a gray elliptical body with a scale pattern and pixel noise on
//! a dark background. Infected fish carry one to three reddish or pale
//! lesion blobs on the body.

use std::path::{Path, PathBuf};

use aquascan_core::raster::RgbImage;
use aquascan_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::imageio::save_image;

pub const DEFAULT_WIDTH: usize = 300;
pub const DEFAULT_HEIGHT: usize = 125;

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Per-image seed so that images are independent of generation order.
pub fn image_seed(seed: u64, label: Label, index: usize) -> u64 {
    let mut z = seed ^ ((index as u64) << 1 | (label == Label::Infected) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn synth_fish(label: Label, seed: u64, width: usize, height: usize) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let cx = w * rng.gen_range(0.46..0.54);
    let cy = h * rng.gen_range(0.45..0.55);
    let ax = w * rng.gen_range(0.36..0.43);
    let ay = h * rng.gen_range(0.28..0.36);
    let gray = rng.gen_range(0.5..0.62);
    let tint = rng.gen_range(0.0..0.04);
    let freq_x = rng.gen_range(0.35..0.6);
    let freq_y = rng.gen_range(0.35..0.6);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let bg = [rng.gen_range(0.08..0.16), rng.gen_range(0.12..0.2), rng.gen_range(0.18..0.28)];

    let mut spots = Vec::new();
    for _ in 0..rng.gen_range(2..6) {
        let (sx, sy) = point_in_body(&mut rng, cx, cy, ax, ay, 0.8);
        let r = h * rng.gen_range(0.015..0.03);
        spots.push(Blob { cx: sx, cy: sy, rx: r, ry: r, color: [0.18, 0.18, 0.2] });
    }
    let mut lesions = Vec::new();
    if label == Label::Infected {
        for _ in 0..rng.gen_range(1..=3) {
            let (lx, ly) = point_in_body(&mut rng, cx, cy, ax, ay, 0.55);
            let r = h * rng.gen_range(0.09..0.15);
            let color = if rng.gen_bool(0.7) {
                [rng.gen_range(0.72..0.85), rng.gen_range(0.22..0.32), rng.gen_range(0.25..0.35)]
            } else {
                [rng.gen_range(0.9..0.97), rng.gen_range(0.7..0.78), rng.gen_range(0.7..0.78)]
            };
            lesions.push(Blob { cx: lx, cy: ly, rx: r * rng.gen_range(1.0..1.6), ry: r, color });
        }
    }

    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let shade = 0.03 * (fy / h - 0.5);
            let mut px = [bg[0] + shade, bg[1] + shade, bg[2] + shade];
            let d = ((fx - cx) / ax).powi(2) + ((fy - cy) / ay).powi(2);
            let body = 1.0 - smoothstep(0.9, 1.0, d);
            if body > 0.0 {
                let scales = 0.035 * (fx * freq_x + phase).sin() * (fy * freq_y).sin();
                let belly = 0.08 * (fy - cy) / ay;
                let v = gray + scales + belly;
                let fish = [v, v + tint * 0.5, v + tint];
                for c in 0..3 {
                    px[c] = px[c] * (1.0 - body) + fish[c] * body;
                }
            }
            for blob in spots.iter().chain(&lesions) {
                let d = ((fx - blob.cx) / blob.rx).powi(2) + ((fy - blob.cy) / blob.ry).powi(2);
                let a = 1.0 - smoothstep(0.6, 1.0, d);
                if a > 0.0 {
                    for (p, b) in px.iter_mut().zip(blob.color) {
                        *p = *p * (1.0 - a) + b * a;
                    }
                }
            }
            let noise = rng.gen_range(-0.035..0.035);
            pixels.push([
                (px[0] + noise + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0),
                (px[1] + noise + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0),
                (px[2] + noise + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0),
            ]);
        }
    }
    RgbImage::new(width, height, pixels).expect("synthetic pixels are clamped")
}

fn point_in_body(rng: &mut ChaCha8Rng, cx: f64, cy: f64, ax: f64, ay: f64, reach: f64) -> (f64, f64) {
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = reach * rng.gen_range(0.0f64..1.0).sqrt();
    (cx + ax * r * t.cos(), cy + ay * r * t.sin())
}

/// Writes `dir/fresh/fish_NNNN.png` and `dir/infected/fish_NNNN.png`.
pub fn write_dataset(
    dir: &Path,
    n_fresh: usize,
    n_infected: usize,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<Vec<PathBuf>> {
    let jobs: Vec<(Label, usize)> = (0..n_fresh)
        .map(|i| (Label::Fresh, i))
        .chain((0..n_infected).map(|i| (Label::Infected, i)))
        .collect();
    jobs.par_iter()
        .map(|&(label, i)| {
            let path = dir.join(label.as_str()).join(format!("fish_{i:04}.png"));
            save_image(&synth_fish(label, image_seed(seed, label, i), width, height), &path)?;
            Ok(path)
        })
        .collect()
}
