//! PNG and binary PPM (P6) reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use aquascan_core::raster::{GrayImage, RgbImage};
use aquascan_core::segment::SegmentationResult;

use crate::error::{AppError, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode_image(&bytes, path)
}

/// Decodes by content; `path` is only used in error messages.
pub fn decode_image(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes, path)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes, path)
    } else {
        Err(AppError::UnsupportedFormat { path: path.to_path_buf() })
    }
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| AppError::corrupt(path, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| AppError::corrupt(path, e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(AppError::corrupt(path, "palette was not expanded")),
    };
    let (max, bytes_per_sample) = match info.bit_depth {
        png::BitDepth::Sixteen => (65535.0, 2),
        png::BitDepth::Eight => (255.0, 1),
        other => return Err(AppError::corrupt(path, format!("unexpected bit depth {other:?}"))),
    };
    let sample = |i: usize| -> f64 {
        let v = if bytes_per_sample == 2 {
            u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as f64
        } else {
            buf[i] as f64
        };
        v / max
    };
    let row_samples = info.line_size / bytes_per_sample;
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let base = y * row_samples + x * channels;
            pixels.push(if channels < 3 {
                [sample(base); 3]
            } else {
                [sample(base), sample(base + 1), sample(base + 2)]
            });
        }
    }
    RgbImage::new(w, h, pixels).map_err(|e| AppError::corrupt(path, e.to_string()))
}

/// Splits the PPM header into whitespace-separated tokens, skipping `#`
/// comments. Returns the tokens and the offset of the raster data.
fn ppm_header(bytes: &[u8], count: usize) -> Option<(Vec<&[u8]>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return None;
        }
        tokens.push(&bytes[start..i]);
    }
    // Exactly one whitespace byte separates the header from the raster.
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return None;
    }
    Some((tokens, i + 1))
}

fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let (tokens, offset) = ppm_header(bytes, 4).ok_or_else(|| AppError::corrupt(path, "truncated PPM header"))?;
    let num = |t: &[u8]| -> Result<usize> {
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| AppError::corrupt(path, "bad number in PPM header"))
    };
    let (w, h, maxval) = (num(tokens[1])?, num(tokens[2])?, num(tokens[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(AppError::corrupt(path, format!("PPM maxval {maxval} out of range")));
    }
    let wide = maxval > 255;
    let need = w.checked_mul(h).and_then(|n| n.checked_mul(if wide { 6 } else { 3 }));
    let data = &bytes[offset..];
    match need {
        Some(n) if data.len() >= n => {}
        _ => return Err(AppError::corrupt(path, "PPM raster is truncated")),
    }
    let max = maxval as f64;
    let sample = |i: usize| -> f64 {
        let v = if wide { u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64 } else { data[i] as f64 };
        (v / max).min(1.0)
    };
    let pixels = (0..w * h).map(|p| [sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)]).collect();
    RgbImage::new(w, h, pixels).map_err(|e| AppError::corrupt(path, e.to_string()))
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB encoding in the format named by the file extension.
pub fn encode_image(image: &RgbImage, path: &Path) -> Result<Vec<u8>> {
    let raw: Vec<u8> = image.pixels().iter().flat_map(|p| [to_u8(p[0]), to_u8(p[1]), to_u8(p[2])]).collect();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
                let mut writer = enc.write_header().map_err(|e| AppError::corrupt(path, e.to_string()))?;
                writer.write_image_data(&raw).map_err(|e| AppError::corrupt(path, e.to_string()))?;
            }
            Ok(out)
        }
        Some("ppm") => {
            let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
            out.extend_from_slice(&raw);
            Ok(out)
        }
        _ => Err(AppError::UnsupportedFormat { path: path.to_path_buf() }),
    }
}

pub fn save_image(image: &RgbImage, path: &Path) -> Result<()> {
    let bytes = encode_image(image, path)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

pub fn save_gray(image: &GrayImage, path: &Path) -> Result<()> {
    save_image(&image.to_rgb(), path)
}

/// Colors each k-means cluster; the lesion cluster is drawn red.
pub fn render_segmentation(seg: &SegmentationResult) -> RgbImage {
    const OTHERS: [[f64; 3]; 4] = [[0.15, 0.15, 0.2], [0.45, 0.5, 0.55], [0.75, 0.78, 0.8], [0.3, 0.45, 0.3]];
    let k = seg.cluster_stats.len();
    let mut palette = Vec::with_capacity(k);
    let mut other = 0;
    for c in 0..k {
        if c == seg.infected_cluster {
            palette.push([0.9, 0.1, 0.1]);
        } else {
            palette.push(OTHERS[other % OTHERS.len()]);
            other += 1;
        }
    }
    let pixels = seg.label_map.iter().map(|&l| palette[l]).collect();
    RgbImage::new(seg.width, seg.height, pixels).expect("segmentation covers the image")
}
