use std::path::Path;

use aquascan::imageio::{decode_image, encode_image, load_image, save_image};
use aquascan::AppError;
use aquascan_core::raster::RgbImage;
use proptest::prelude::*;

fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 == 1 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

fn adler32(bytes: &[u8]) -> u32 {
    let (mut a, mut b) = (1u32, 0u32);
    for &x in bytes {
        a = (a + x as u32) % 65521;
        b = (b + a) % 65521;
    }
    (b << 16) | a
}

fn chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    let mut body = kind.to_vec();
    body.extend_from_slice(data);
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32(&body).to_be_bytes());
}

/// PNG with unfiltered scanlines in a single stored deflate block.
fn handmade_png(width: u32, height: u32, color_type: u8, depth: u8, rows: &[Vec<u8>]) -> Vec<u8> {
    let mut raw = Vec::new();
    for row in rows {
        raw.push(0);
        raw.extend_from_slice(row);
    }
    let mut z = vec![0x78, 0x01, 0x01];
    z.extend_from_slice(&(raw.len() as u16).to_le_bytes());
    z.extend_from_slice(&(!(raw.len() as u16)).to_le_bytes());
    z.extend_from_slice(&raw);
    z.extend_from_slice(&adler32(&raw).to_be_bytes());

    let mut out = vec![0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];
    let mut ihdr = Vec::new();
    ihdr.extend_from_slice(&width.to_be_bytes());
    ihdr.extend_from_slice(&height.to_be_bytes());
    ihdr.extend_from_slice(&[depth, color_type, 0, 0, 0]);
    chunk(&mut out, b"IHDR", &ihdr);
    chunk(&mut out, b"IDAT", &z);
    chunk(&mut out, b"IEND", &[]);
    out
}

#[test]
fn oracle_checksums() {
    assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    assert_eq!(adler32(b"Wikipedia"), 0x11E6_0398);
}

#[test]
fn decodes_handmade_rgb_png() {
    let bytes = handmade_png(2, 2, 2, 8, &[vec![255, 0, 0, 0, 255, 0], vec![0, 0, 255, 51, 102, 153]]);
    let img = decode_image(&bytes, Path::new("x.png")).unwrap();
    assert_eq!((img.width(), img.height()), (2, 2));
    assert_eq!(img.get(0, 0), [1.0, 0.0, 0.0]);
    assert_eq!(img.get(1, 0), [0.0, 1.0, 0.0]);
    assert_eq!(img.get(0, 1), [0.0, 0.0, 1.0]);
    assert_eq!(img.get(1, 1), [0.2, 0.4, 0.6]);
}

#[test]
fn decodes_gray_alpha_and_sixteen_bit() {
    let gray = handmade_png(3, 1, 0, 8, &[vec![0, 51, 255]]);
    let img = decode_image(&gray, Path::new("g.png")).unwrap();
    assert_eq!(img.pixels(), &[[0.0; 3], [0.2; 3], [1.0; 3]]);

    let rgba = handmade_png(1, 1, 6, 8, &[vec![255, 255, 0, 7]]);
    assert_eq!(decode_image(&rgba, Path::new("a.png")).unwrap().get(0, 0), [1.0, 1.0, 0.0]);

    let deep = handmade_png(1, 1, 2, 16, &[vec![0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00]]);
    let p = decode_image(&deep, Path::new("d.png")).unwrap().get(0, 0);
    assert_eq!(p[0], 1.0);
    assert_eq!(p[1], 0.0);
    assert!((p[2] - 32768.0 / 65535.0).abs() < 1e-15);
}

#[test]
fn decodes_ppm_with_comments_and_wide_samples() {
    let mut bytes = b"P6\n# made by hand\n2 1\n255\n".to_vec();
    bytes.extend_from_slice(&[255, 0, 51, 0, 0, 0]);
    let img = decode_image(&bytes, Path::new("x.ppm")).unwrap();
    assert_eq!(img.pixels(), &[[1.0, 0.0, 0.2], [0.0; 3]]);

    let mut wide = b"P6 1 1 1000\n".to_vec();
    wide.extend_from_slice(&[0x03, 0xE8, 0x01, 0xF4, 0x00, 0x00]);
    assert_eq!(decode_image(&wide, Path::new("w.ppm")).unwrap().get(0, 0), [1.0, 0.5, 0.0]);
}

#[test]
fn rejects_bad_inputs() {
    let p = Path::new("bad.png");
    assert!(matches!(decode_image(b"GIF89a....", p), Err(AppError::UnsupportedFormat { .. })));
    let mut truncated = handmade_png(4, 4, 2, 8, &vec![vec![9; 12]; 4]);
    truncated.truncate(truncated.len() - 30);
    assert!(matches!(decode_image(&truncated, p), Err(AppError::CorruptFile { .. })));
    let mut flipped = handmade_png(2, 1, 2, 8, &[vec![1, 2, 3, 4, 5, 6]]);
    let n = flipped.len();
    flipped[n - 20] ^= 0xFF;
    assert!(decode_image(&flipped, p).is_err());
    assert!(matches!(decode_image(b"P6\n2 2\n255\n\x00\x01", p), Err(AppError::CorruptFile { .. })));
    let err = load_image(Path::new("/nonexistent/fish.png")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/fish.png"));
    let img = RgbImage::filled(1, 1, [0.0; 3]).unwrap();
    assert!(matches!(encode_image(&img, Path::new("x.bmp")), Err(AppError::UnsupportedFormat { .. })));
}

#[test]
fn save_creates_directories() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a/b/c.ppm");
    let img = RgbImage::filled(3, 2, [0.2, 0.4, 0.6]).unwrap();
    save_image(&img, &path).unwrap();
    assert_eq!(load_image(&path).unwrap(), img);
}

proptest! {
    #[test]
    fn eight_bit_round_trip(w in 1usize..9, h in 1usize..9, data in proptest::collection::vec(any::<u8>(), 3 * 64)) {
        let pixels = (0..w * h)
            .map(|i| [data[3 * i] as f64 / 255.0, data[3 * i + 1] as f64 / 255.0, data[3 * i + 2] as f64 / 255.0])
            .collect();
        let img = RgbImage::new(w, h, pixels).unwrap();
        for name in ["x.png", "x.ppm"] {
            let bytes = encode_image(&img, Path::new(name)).unwrap();
            prop_assert_eq!(&decode_image(&bytes, Path::new(name)).unwrap(), &img);
        }
    }

    #[test]
    fn quantization_error_is_half_a_step(v in 0.0f64..=1.0) {
        let img = RgbImage::filled(1, 1, [v; 3]).unwrap();
        let bytes = encode_image(&img, Path::new("q.png")).unwrap();
        let back = decode_image(&bytes, Path::new("q.png")).unwrap().get(0, 0)[0];
        prop_assert!((back - v).abs() <= 0.5 / 255.0 + 1e-12);
    }
}
