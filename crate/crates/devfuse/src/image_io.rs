//! Image files in and out: 8-bit PNG (grey or RGB) and binary PPM (P6).
//!
//! Loading maps samples to `[0, 1]` by `v / 255`; saving inverts with
//! `round(v * 255)` clamped to `[0, 255]`, so load -> save -> load is the
//! identity on the quantized lattice.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};

use devfuse_core::MultiMatrix;

use crate::error::{Error, Result};
use crate::util::atomic_write;

/// A decoded image: path plus its normalized matrix (1 or 3 channels).
#[derive(Debug, Clone)]
pub struct ImageFile {
    pub path: PathBuf,
    pub matrix: MultiMatrix,
}

/// File extensions the loader accepts.
pub const SUPPORTED_EXTENSIONS: &[&str] = &["png", "ppm", "pgm"];

pub fn load_image(path: &Path) -> Result<ImageFile> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let matrix = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLuma16(_) => {
            let grey = img.to_luma8();
            let (w, h) = (grey.width() as usize, grey.height() as usize);
            let data = grey.into_raw().iter().map(|&v| v as f64 / 255.0).collect();
            MultiMatrix::new(h, w, 1, data)?
        }
        _ => {
            let rgb = img.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let raw = rgb.into_raw();
            // interleaved RGB -> planar channels
            let mut data = vec![0.0; w * h * 3];
            for (px, chunk) in raw.chunks_exact(3).enumerate() {
                for k in 0..3 {
                    data[k * w * h + px] = chunk[k] as f64 / 255.0;
                }
            }
            MultiMatrix::new(h, w, 3, data)?
        }
    };
    Ok(ImageFile {
        path: path.to_path_buf(),
        matrix,
    })
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn save_image(m: &MultiMatrix, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => save_png(m, path),
        "ppm" => save_ppm(m, path),
        other => Err(Error::invalid(format!(
            "unsupported output format .{other} (use .png or .ppm)"
        ))),
    }
}

fn save_png(m: &MultiMatrix, path: &Path) -> Result<()> {
    let (h, w) = (m.rows() as u32, m.cols() as u32);
    let img = match m.channels() {
        1 => {
            let raw: Vec<u8> = m.channel_plane(0).iter().map(|&v| quantize(v)).collect();
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, raw).expect("sized buffer"))
        }
        3 => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, interleave_rgb(m)).expect("sized buffer"),
        ),
        n => {
            return Err(Error::invalid(format!(
                "cannot save {n}-channel image (want 1 or 3)"
            )))
        }
    };
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    atomic_write(path, &bytes.into_inner())
}

fn save_ppm(m: &MultiMatrix, path: &Path) -> Result<()> {
    if m.channels() != 1 && m.channels() != 3 {
        return Err(Error::invalid(format!(
            "cannot save {}-channel image (want 1 or 3)",
            m.channels()
        )));
    }
    let mut bytes = format!("P6\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    if m.channels() == 3 {
        bytes.extend_from_slice(&interleave_rgb(m));
    } else {
        // grey replicated into RGB
        for &v in m.channel_plane(0) {
            let q = quantize(v);
            bytes.extend_from_slice(&[q, q, q]);
        }
    }
    atomic_write(path, &bytes)
}

fn interleave_rgb(m: &MultiMatrix) -> Vec<u8> {
    let pixels = m.rows() * m.cols();
    let mut raw = Vec::with_capacity(pixels * 3);
    for px in 0..pixels {
        for k in 0..3 {
            raw.push(quantize(m.channel_plane(k)[px]));
        }
    }
    raw
}
