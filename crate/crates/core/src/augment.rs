//! Geometric dataset augmentation: flips, quarter-turn rotations, shifts
//! with edge replication, and center zoom.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::raster::RgbImage;
use crate::resize::{resize_image, ResizeError};

pub const MIN_ZOOM: f64 = 0.5;
pub const MAX_ZOOM: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("bad augmentation parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Resize(#[from] ResizeError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse augmentation `{input}`: {reason}")]
pub struct ParseAugmentError {
    pub input: String,
    pub reason: &'static str,
}

/// Counterclockwise quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(self) -> u32 {
        match self {
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AugmentOp {
    FlipH,
    FlipV,
    Rot(Rotation),
    /// Content moves by `(dx, dy)` pixels; vacated pixels copy the edge.
    Trans { dx: i64, dy: i64 },
    Zoom(f64),
}

impl AugmentOp {
    /// File-name-safe tag, e.g. `rot90`, `transm5_2`, `zoom1p25`.
    pub fn slug(&self) -> String {
        let signed = |v: i64| if v < 0 { alloc::format!("m{}", v.unsigned_abs()) } else { alloc::format!("{v}") };
        match *self {
            AugmentOp::Trans { dx, dy } => alloc::format!("trans{}_{}", signed(dx), signed(dy)),
            _ => self.to_string().replace(':', "").replace('.', "p"),
        }
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentOp::FlipH => f.write_str("fliph"),
            AugmentOp::FlipV => f.write_str("flipv"),
            AugmentOp::Rot(r) => write!(f, "rot:{}", r.degrees()),
            AugmentOp::Trans { dx, dy } => write!(f, "trans:{dx}:{dy}"),
            AugmentOp::Zoom(z) => write!(f, "zoom:{z}"),
        }
    }
}

impl FromStr for AugmentOp {
    type Err = ParseAugmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseAugmentError { input: s.into(), reason };
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or("").to_ascii_lowercase();
        let args: Vec<&str> = parts.collect();
        let op = match (kind.as_str(), args.as_slice()) {
            ("fliph", []) => AugmentOp::FlipH,
            ("flipv", []) => AugmentOp::FlipV,
            ("rot", [deg]) => AugmentOp::Rot(match deg.trim() {
                "90" => Rotation::R90,
                "180" => Rotation::R180,
                "270" => Rotation::R270,
                _ => return Err(err("rotation must be 90, 180 or 270")),
            }),
            ("trans", [dx, dy]) => AugmentOp::Trans {
                dx: dx.trim().parse().map_err(|_| err("shift must be an integer"))?,
                dy: dy.trim().parse().map_err(|_| err("shift must be an integer"))?,
            },
            ("zoom", [z]) => {
                let z: f64 = z.trim().parse().map_err(|_| err("zoom factor must be a number"))?;
                if !(MIN_ZOOM..=MAX_ZOOM).contains(&z) {
                    return Err(err("zoom factor must lie in [0.5, 2]"));
                }
                AugmentOp::Zoom(z)
            }
            ("fliph" | "flipv", _) => return Err(err("flips take no arguments")),
            ("rot", _) => return Err(err("expected rot:<degrees>")),
            ("trans", _) => return Err(err("expected trans:<dx>:<dy>")),
            ("zoom", _) => return Err(err("expected zoom:<factor>")),
            _ => return Err(err("unknown operation")),
        };
        Ok(op)
    }
}

impl From<AugmentOp> for String {
    fn from(op: AugmentOp) -> Self {
        op.to_string()
    }
}

impl TryFrom<String> for AugmentOp {
    type Error = ParseAugmentError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parses a comma-separated list such as `fliph,rot:90,trans:5:0,zoom:1.2`.
pub fn parse_ops(list: &str) -> Result<Vec<AugmentOp>, ParseAugmentError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

fn remap(image: &RgbImage, width: usize, height: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> RgbImage {
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (sx, sy) = src(x, y);
            pixels.push(image.get(sx, sy));
        }
    }
    RgbImage::new(width, height, pixels).expect("remapped pixels come from a valid image")
}

#[inline]
fn clamp_index(v: i64, len: usize) -> usize {
    v.clamp(0, len as i64 - 1) as usize
}

pub fn apply_augment(image: &RgbImage, op: &AugmentOp) -> Result<RgbImage, AugmentError> {
    let (w, h) = (image.width(), image.height());
    Ok(match *op {
        AugmentOp::FlipH => remap(image, w, h, |x, y| (w - 1 - x, y)),
        AugmentOp::FlipV => remap(image, w, h, |x, y| (x, h - 1 - y)),
        AugmentOp::Rot(Rotation::R90) => remap(image, h, w, |x, y| (w - 1 - y, x)),
        AugmentOp::Rot(Rotation::R180) => remap(image, w, h, |x, y| (w - 1 - x, h - 1 - y)),
        AugmentOp::Rot(Rotation::R270) => remap(image, h, w, |x, y| (y, h - 1 - x)),
        AugmentOp::Trans { dx, dy } => {
            if dx.unsigned_abs() >= w as u64 || dy.unsigned_abs() >= h as u64 {
                return Err(AugmentError::BadParameter(alloc::format!(
                    "shift ({dx}, {dy}) must be smaller than the {w}x{h} image"
                )));
            }
            remap(image, w, h, |x, y| (clamp_index(x as i64 - dx, w), clamp_index(y as i64 - dy, h)))
        }
        AugmentOp::Zoom(z) => {
            if !(MIN_ZOOM..=MAX_ZOOM).contains(&z) {
                return Err(AugmentError::BadParameter(alloc::format!("zoom factor {z} outside [0.5, 2]")));
            }
            let zw = (libm::round(w as f64 * z) as usize).max(1);
            let zh = (libm::round(h as f64 * z) as usize).max(1);
            let zoomed = resize_image(image, zw, zh)?;
            let ox = (zw as i64 - w as i64).div_euclid(2);
            let oy = (zh as i64 - h as i64).div_euclid(2);
            remap(&zoomed, w, h, |x, y| (clamp_index(x as i64 + ox, zw), clamp_index(y as i64 + oy, zh)))
        }
    })
}

/// For each of `n_images` sources, the indices into `ops` to apply.
///
/// Without a target every source gets every op. With `target_total`, the
/// `target_total - n_images` variants are spread as evenly as possible;
/// which sources get one extra and which ops each source uses are drawn
/// from `seed`. The plan for a source lists op indices in ascending order.
pub fn plan_expansion(
    n_images: usize,
    n_ops: usize,
    target_total: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<usize>>, AugmentError> {
    let Some(target) = target_total else {
        return Ok((0..n_images).map(|_| (0..n_ops).collect()).collect());
    };
    if target < n_images || target - n_images > n_images * n_ops {
        return Err(AugmentError::BadParameter(alloc::format!(
            "target {target} not reachable from {n_images} images with {n_ops} ops"
        )));
    }
    let extra = target - n_images;
    if n_images == 0 {
        return Ok(Vec::new());
    }
    let (base, remainder) = (extra / n_images, extra % n_images);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_images).collect();
    order.shuffle(&mut rng);
    let mut counts = alloc::vec![base; n_images];
    for &i in &order[..remainder] {
        counts[i] += 1;
    }
    let all: Vec<usize> = (0..n_ops).collect();
    Ok(counts
        .into_iter()
        .map(|k| {
            let mut picked: Vec<usize> = all.choose_multiple(&mut rng, k).copied().collect();
            picked.sort_unstable();
            picked
        })
        .collect())
}
