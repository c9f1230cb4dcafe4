//! Image-quality metrics and the phase/amplitude views they are computed on.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{ensure_same_dims, ComplexField, RealImage};

const WINDOW_RADIUS: usize = 5;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_taps() -> [f64; 2 * WINDOW_RADIUS + 1] {
    let mut taps = [0.0; 2 * WINDOW_RADIUS + 1];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - WINDOW_RADIUS as f64;
        *t = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Half-sample symmetric reflection of `i` into `0..n`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - 1 - m) as usize
    } else {
        m as usize
    }
}

fn gaussian_filter(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = WINDOW_RADIUS as isize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * data[y * w + reflect(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp[reflect(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// `K1 = 0.01`, `K2 = 0.03`, and reflected borders.
pub fn ssim(a: &RealImage, b: &RealImage, dynamic_range: f64) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    if !(dynamic_range > 0.0) {
        return Err(crate::error::Error::InvalidInput(format!(
            "dynamic range must be > 0, got {dynamic_range}"
        )));
    }
    let (w, h) = a.dims();
    let taps = gaussian_taps();
    let (xa, xb) = (a.as_slice(), b.as_slice());
    let aa: Vec<f64> = xa.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = xb.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = xa.iter().zip(xb).map(|(p, q)| p * q).collect();

    let mu_a = gaussian_filter(xa, w, h, &taps);
    let mu_b = gaussian_filter(xb, w, h, &taps);
    let e_aa = gaussian_filter(&aa, w, h, &taps);
    let e_bb = gaussian_filter(&bb, w, h, &taps);
    let e_ab = gaussian_filter(&ab, w, h, &taps);

    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let mut total = 0.0;
    for i in 0..xa.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok((total / xa.len() as f64).clamp(-1.0, 1.0))
}

pub fn mse(a: &RealImage, b: &RealImage) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(p, q)| (p - q).powi(2))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &RealImage, b: &RealImage, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(crate::error::Error::InvalidInput(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// Formats a PSNR value, printing the identical-image sentinel as `inf`.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Removes the unobservable global phase: multiplies `estimate` by the
/// unit phasor that best aligns it with `reference` in least squares.
pub fn align_global_phase(estimate: &ComplexField, reference: &ComplexField) -> Result<ComplexField> {
    ensure_same_dims(estimate.dims(), reference.dims())?;
    let inner: Complex64 = reference
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .map(|(r, e)| r * e.conj())
        .sum();
    if inner.norm() == 0.0 {
        return Ok(estimate.clone());
    }
    let rot = inner / inner.norm();
    Ok(estimate.map(|e| e * rot))
}

/// Wrapped phase mapped from `[0, 2π)` onto `[0, 255)`.
pub fn phase_display(field: &ComplexField) -> RealImage {
    field.wrapped_phase().map(|p| p * 255.0 / TAU)
}

/// Phase and amplitude quality of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QualityReport {
    pub ssim_phase: f64,
    pub psnr_phase: f64,
    pub ssim_amplitude: f64,
    pub psnr_amplitude: f64,
}

/// Scores `estimate` against `truth` after global-phase alignment. Phase
/// is compared as 8-bit-range images (dynamic range/peak 255); amplitude
/// uses the truth's peak amplitude.
pub fn assess(estimate: &ComplexField, truth: &ComplexField) -> Result<QualityReport> {
    let aligned = align_global_phase(estimate, truth)?;
    let (pe, pt) = (phase_display(&aligned), phase_display(truth));
    let (ae, at) = (aligned.amplitude(), truth.amplitude());
    let amp_peak = at.min_max().1.max(f64::MIN_POSITIVE);
    Ok(QualityReport {
        ssim_phase: ssim(&pe, &pt, 255.0)?,
        psnr_phase: psnr(&pe, &pt, 255.0)?,
        ssim_amplitude: ssim(&ae, &at, amp_peak)?,
        psnr_amplitude: psnr(&ae, &at, amp_peak)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(w: usize, h: usize) -> RealImage {
        RealImage::from_fn(w, h, |x, y| {
            128.0 + 60.0 * ((x as f64) * 0.7).sin() * ((y as f64) * 0.3).cos() + (x * y % 7) as f64
        })
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = texture(24, 17);
        let b = a.map(|v| v * 0.9 + 10.0 + (v * 13.0).sin() * 5.0);
        assert_eq!(ssim(&a, &a, 255.0).unwrap(), 1.0);
        assert_eq!(ssim(&a, &b, 255.0).unwrap(), ssim(&b, &a, 255.0).unwrap());
        let small = texture(3, 2);
        assert!((ssim(&small, &small, 255.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_of_inverted_structure_is_negative() {
        let a = texture(32, 32);
        let inv = a.map(|v| 255.0 - v);
        assert!(ssim(&a, &inv, 255.0).unwrap() < 0.0);
    }

    #[test]
    fn metric_argument_checks() {
        let a = texture(4, 4);
        let b = texture(4, 5);
        assert!(ssim(&a, &b, 255.0).is_err());
        assert!(psnr(&a, &b, 255.0).is_err());
        assert!(ssim(&a, &a, 0.0).is_err());
        assert!(psnr(&a, &a, -1.0).is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let a = RealImage::filled(4, 4, 100.0);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        assert_eq!(format_db(f64::INFINITY), "inf");
        let b = RealImage::filled(4, 4, 101.0);
        let p = psnr(&a, &b, 255.0).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        let c = RealImage::filled(4, 4, 100.5);
        let shift = psnr(&a, &c, 255.0).unwrap() - p;
        assert!((shift - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn global_phase_alignment_recovers_rotation() {
        let truth = ComplexField::from_fn(8, 8, |x, y| Complex64::from_polar(1.0, 0.2 * x as f64 + 0.1 * y as f64));
        let rotated = truth.map(|c| c * Complex64::from_polar(1.0, 2.0));
        let aligned = align_global_phase(&rotated, &truth).unwrap();
        for (a, b) in aligned.as_slice().iter().zip(truth.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        let q = assess(&rotated, &truth).unwrap();
        assert!(q.ssim_phase > 0.999_999);
    }
}
