//! Lossless grayscale PNG input/output.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::grid::RealImage;

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Loads an 8- or 16-bit grayscale image as grey levels in `[0, 255]`
/// (16-bit samples are divided by 257).
pub fn read_grayscale(path: impl AsRef<Path>) -> Result<RealImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 257.0)
            .collect(),
        other => {
            return Err(image_err(
                path,
                format!("expected 8- or 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    RealImage::from_vec(w, h, values)
}

/// Writes grey levels (clamped to `[0, 255]`, rounded) as an 8-bit PNG.
pub fn write_gray8(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|v| v.clamp(0.0, 255.0).round() as u8)
        .collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw)
            .ok_or_else(|| image_err(path, "buffer size mismatch"))?;
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Writes grey levels in `[0, 255]` as a 16-bit PNG (×257).
pub fn write_gray16(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u16> = img
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 255.0) * 257.0).round() as u16)
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw)
            .ok_or_else(|| image_err(path, "buffer size mismatch"))?;
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Min-max scales an arbitrary real image to `[0, 255]` for viewing.
pub fn to_display_range(img: &RealImage) -> RealImage {
    crate::priors::scaling::scale_to_display(img).0
}
