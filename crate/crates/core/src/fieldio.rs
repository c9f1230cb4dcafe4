//! Raw little-endian field files.
//!
//! `CFLD`: magic, version `0x01`, `u32` width, `u32` height, then
//! `width·height` pairs of `f64` (re, im), row-major.
//! `IFLD`: same header with magic `IFLD` and one `f64` per pixel.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealImage};

pub const COMPLEX_MAGIC: &[u8; 4] = b"CFLD";
pub const REAL_MAGIC: &[u8; 4] = b"IFLD";
pub const FORMAT_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], width: usize, height: usize) -> Result<()> {
    let w = u32::try_from(width).map_err(|_| Error::Format(format!("width {width} too large")))?;
    let h =
        u32::try_from(height).map_err(|_| Error::Format(format!("height {height} too large")))?;
    out.extend_from_slice(magic);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    Ok(())
}

fn read_header(bytes: &[u8], magic: &[u8; 4], value_size: usize) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file too short for header ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    let width = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(value_size))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let payload = bytes.len() - HEADER_LEN;
    if payload != expected {
        return Err(Error::Format(format!(
            "payload is {payload} bytes, {width}x{height} needs {expected}"
        )));
    }
    Ok((width, height))
}

pub fn encode_complex(field: &ComplexField) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + field.len() * 16);
    write_header(&mut out, COMPLEX_MAGIC, field.width(), field.height())?;
    for c in field.as_slice() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_complex(bytes: &[u8]) -> Result<ComplexField> {
    let (w, h) = read_header(bytes, COMPLEX_MAGIC, 16)?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::from_vec(w, h, values)
}

pub fn encode_real(image: &RealImage) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + image.len() * 8);
    write_header(&mut out, REAL_MAGIC, image.width(), image.height())?;
    for v in image.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_real(bytes: &[u8]) -> Result<RealImage> {
    let (w, h) = read_header(bytes, REAL_MAGIC, 8)?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RealImage::from_vec(w, h, values)
}

pub fn write_complex(path: impl AsRef<Path>, field: &ComplexField) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_complex(field)?).map_err(|e| Error::io(path, e))
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<ComplexField> {
    let path = path.as_ref();
    decode_complex(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_real(path: impl AsRef<Path>, image: &RealImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_real(image)?).map_err(|e| Error::io(path, e))
}

pub fn read_real(path: impl AsRef<Path>) -> Result<RealImage> {
    let path = path.as_ref();
    decode_real(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
