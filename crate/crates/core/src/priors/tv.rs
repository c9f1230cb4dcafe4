//! Isotropic total-variation denoising by Chambolle's dual projection.
//!
//! Solves `min_u ½‖u − g‖² + λ·TV(u)` with forward-difference gradients
//! (zero across the last row/column) and the matching negative-adjoint
//! divergence.

use serde::{Deserialize, Serialize};

use crate::grid::RealImage;

/// Dual step. `1/4` is the largest step that converges in practice.
pub const DUAL_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvParams {
    pub weight: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iter() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-4
}

impl TvParams {
    pub fn new(weight: f64) -> Self {
        Self {
            weight,
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

/// Discrete isotropic TV, `Σ |∇u|`.
pub fn total_variation(img: &RealImage) -> f64 {
    let (w, h) = img.dims();
    let u = img.as_slice();
    let mut tv = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let gx = if x + 1 < w { u[i + 1] - u[i] } else { 0.0 };
            let gy = if y + 1 < h { u[i + w] - u[i] } else { 0.0 };
            tv += (gx * gx + gy * gy).sqrt();
        }
    }
    tv
}

fn divergence(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let dx = if x == 0 { px[i] } else { px[i] - px[i - 1] };
            let dy = if y == 0 { py[i] } else { py[i] - py[i - w] };
            out[i] = dx + dy;
        }
    }
}

pub fn tv_denoise(img: &RealImage, weight: f64, max_iter: usize, tol: f64) -> RealImage {
    if weight <= 0.0 || img.is_empty() {
        return img.clone();
    }
    let (w, h) = img.dims();
    let g = img.as_slice();
    let n = g.len();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut div = vec![0.0; n];
    let inv_weight = 1.0 / weight;

    for _ in 0..max_iter {
        divergence(&px, &py, w, h, &mut div);
        for (d, gi) in div.iter_mut().zip(g) {
            *d -= gi * inv_weight;
        }
        let mut max_change: f64 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let gx = if x + 1 < w { div[i + 1] - div[i] } else { 0.0 };
                let gy = if y + 1 < h { div[i + w] - div[i] } else { 0.0 };
                let denom = 1.0 + DUAL_STEP * (gx * gx + gy * gy).sqrt();
                let nx = (px[i] + DUAL_STEP * gx) / denom;
                let ny = (py[i] + DUAL_STEP * gy) / denom;
                max_change = max_change.max((nx - px[i]).abs()).max((ny - py[i]).abs());
                px[i] = nx;
                py[i] = ny;
            }
        }
        if max_change < tol {
            break;
        }
    }

    divergence(&px, &py, w, h, &mut div);
    let out = g.iter().zip(&div).map(|(gi, d)| gi - weight * d).collect();
    RealImage::from_vec(w, h, out).expect("dims preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noisy(w: usize, h: usize, seed: u64) -> RealImage {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        RealImage::from_fn(w, h, |x, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = (s >> 11) as f64 / (1u64 << 53) as f64;
            let base = if x < w / 2 { 10.0 } else { 40.0 };
            base + 8.0 * (r - 0.5)
        })
    }

    #[test]
    fn zero_weight_returns_input() {
        let img = noisy(8, 8, 3);
        assert_eq!(tv_denoise(&img, 0.0, 50, 1e-4), img);
    }

    #[test]
    fn constant_is_fixed_point() {
        let img = RealImage::filled(7, 5, 3.25);
        let out = tv_denoise(&img, 12.0, 100, 1e-8);
        for v in out.as_slice() {
            assert!((v - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn reduces_total_variation_of_noisy_step() {
        let img = noisy(16, 16, 11);
        let out = tv_denoise(&img, 2.0, 200, 1e-6);
        assert!(total_variation(&out) < 0.5 * total_variation(&img));
        assert!((out.mean() - img.mean()).abs() < 1e-9);
    }

    #[test]
    fn very_large_weight_flattens_to_mean() {
        let img = noisy(8, 8, 5);
        let out = tv_denoise(&img, 1e4, 20_000, 1e-10);
        let m = img.mean();
        for v in out.as_slice() {
            assert!((v - m).abs() < 1e-3, "{v} vs {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn never_increases_tv_and_keeps_mean(
            values in proptest::collection::vec(0.0f64..255.0, 36),
            weight in 0.1f64..60.0,
        ) {
            let img = RealImage::from_vec(6, 6, values).unwrap();
            let out = tv_denoise(&img, weight, 50, 1e-4);
            prop_assert!(total_variation(&out) <= total_variation(&img) + 1e-9);
            prop_assert!((out.mean() - img.mean()).abs() <= 1e-9);
            prop_assert!(out.all_finite());
        }
    }
}
