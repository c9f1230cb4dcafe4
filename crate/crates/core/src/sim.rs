//! Synthetic inline holograms: phantom objects, forward diffraction and
//! seeded photon shot noise.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealImage};
use crate::optics::{Direction, OpticalConfig, TransferFunction};

/// A recorded diffraction pattern: nonnegative, finite intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage(RealImage);

impl IntensityImage {
    pub fn new(image: RealImage) -> Result<Self> {
        if let Some(v) = image
            .as_slice()
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "intensity must be finite and >= 0, found {v}"
            )));
        }
        Ok(Self(image))
    }

    pub fn image(&self) -> &RealImage {
        &self.0
    }

    pub fn into_image(self) -> RealImage {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Expected photon count at the brightest pixel.
    pub peak_photons: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub const DEFAULT_PEAK_PHOTONS: f64 = 1e4;

    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            peak_photons: Self::DEFAULT_PEAK_PHOTONS,
            seed: 0,
        }
    }

    pub fn poisson(peak_photons: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Poisson,
            peak_photons,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == NoiseKind::Poisson && !(self.peak_photons.is_finite() && self.peak_photons > 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "peak_photons must be > 0, got {}",
                self.peak_photons
            )));
        }
        Ok(())
    }
}

/// Draws one Poisson count per mean, in order, from a ChaCha8 stream.
pub fn sample_poisson(means: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    means
        .iter()
        .map(|&m| {
            if m > 0.0 {
                Poisson::new(m).expect("positive finite mean").sample(&mut rng)
            } else {
                // keep the stream aligned with the pixel index
                let _: u64 = rng.random();
                0.0
            }
        })
        .collect()
}

/// `I = ℘(|g|²)` with `g` the forward-propagated object field.
pub fn simulate_diffraction(
    field: &ComplexField,
    otf: &TransferFunction,
    noise: &NoiseModel,
) -> Result<IntensityImage> {
    noise.validate()?;
    let sensor = otf.propagate(field, Direction::Forward)?;
    let clean = sensor.map(|g| g.norm_sqr());
    let noisy = match noise.kind {
        NoiseKind::None => clean,
        NoiseKind::Poisson => {
            let (_, peak) = clean.min_max();
            if peak <= 0.0 {
                clean
            } else {
                let to_photons = noise.peak_photons / peak;
                let means: Vec<f64> = clean.as_slice().iter().map(|v| v * to_photons).collect();
                let counts = sample_poisson(&means, noise.seed);
                RealImage::from_vec(
                    clean.width(),
                    clean.height(),
                    counts.into_iter().map(|k| k / to_photons).collect(),
                )?
            }
        }
    };
    IntensityImage::new(noisy)
}

/// Grey-level to complex-field mapping for phantoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomMapping {
    /// Unit amplitude, phase `gray·2π/255` (255 wraps to 0).
    PurePhase,
    /// The grey level drives amplitude and phase linearly over the given ranges.
    AmplitudePhase {
        amp_min: f64,
        amp_max: f64,
        phase_min: f64,
        phase_max: f64,
    },
}

pub fn make_phantom(gray: &RealImage, mapping: PhantomMapping) -> Result<ComplexField> {
    if let Some(v) = gray
        .as_slice()
        .iter()
        .find(|v| !(0.0..=255.0).contains(*v))
    {
        return Err(Error::InvalidInput(format!(
            "phantom grey level {v} outside [0, 255]"
        )));
    }
    let field = match mapping {
        PhantomMapping::PurePhase => {
            gray.map(|&g| num_complex::Complex64::from_polar(1.0, g * TAU / 255.0))
        }
        PhantomMapping::AmplitudePhase {
            amp_min,
            amp_max,
            phase_min,
            phase_max,
        } => gray.map(|&g| {
            let t = g / 255.0;
            num_complex::Complex64::from_polar(
                amp_min + t * (amp_max - amp_min),
                phase_min + t * (phase_max - phase_min),
            )
        }),
    };
    if !field.all_finite() {
        return Err(Error::InvalidInput("phantom mapping produced non-finite values".into()));
    }
    Ok(field)
}

/// Deterministic stand-in for a cultured-cell phase image: a dim background
/// with smooth elliptical cell bodies, brighter nuclei and a few granules.
/// Grey levels stay inside `[20, 200]`.
pub fn cell_like_phantom(width: usize, height: usize, seed: u64) -> RealImage {
    struct Blob {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        angle: f64,
        height: f64,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = width.min(height) as f64;
    let mut blobs = Vec::new();
    let cells = 7;
    for _ in 0..cells {
        let cx = rng.random_range(0.15..0.85) * width as f64;
        let cy = rng.random_range(0.15..0.85) * height as f64;
        let rx = rng.random_range(0.07..0.14) * scale;
        let ry = rx * rng.random_range(0.55..0.95);
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        blobs.push(Blob { cx, cy, rx, ry, angle, height: rng.random_range(60.0..90.0) });
        // nucleus
        blobs.push(Blob {
            cx: cx + rng.random_range(-0.2..0.2) * rx,
            cy: cy + rng.random_range(-0.2..0.2) * ry,
            rx: rx * 0.4,
            ry: ry * 0.45,
            angle,
            height: rng.random_range(35.0..55.0),
        });
        for _ in 0..3 {
            blobs.push(Blob {
                cx: cx + rng.random_range(-0.6..0.6) * rx,
                cy: cy + rng.random_range(-0.6..0.6) * ry,
                rx: 0.018 * scale,
                ry: 0.018 * scale,
                angle: 0.0,
                height: rng.random_range(10.0..20.0),
            });
        }
    }
    let background = 25.0;
    RealImage::from_fn(width, height, |x, y| {
        let mut v = background;
        for b in &blobs {
            let (dx, dy) = (x as f64 - b.cx, y as f64 - b.cy);
            let (s, c) = b.angle.sin_cos();
            let u = (c * dx + s * dy) / b.rx;
            let w = (-s * dx + c * dy) / b.ry;
            let r2 = u * u + w * w;
            if r2 < 1.0 {
                // smooth dome with a soft rim
                v += b.height * (1.0 - r2).powf(0.6);
            }
        }
        v.clamp(20.0, 200.0)
    })
}

/// Result of a binned Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Bins integer counts against the Poisson(`mean`) law, merging adjacent
/// values until each bin expects at least five observations. Returns the
/// statistic and its degrees of freedom (bins − 1).
fn poisson_bins(counts: &[f64], mean: f64) -> Result<(f64, usize)> {
    let law = statrs::distribution::Poisson::new(mean)
        .map_err(|e| Error::InvalidInput(format!("poisson mean {mean}: {e}")))?;
    let n = counts.len() as f64;
    let min_expected = 5.0;
    let hi = (mean + 12.0 * mean.sqrt() + 20.0).ceil() as u64;

    // upper edges (inclusive) of each bin and their probabilities
    let mut edges: Vec<u64> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for k in 0..=hi {
        acc += law.pmf(k);
        if acc * n >= min_expected {
            edges.push(k);
            probs.push(acc);
            acc = 0.0;
        }
    }
    let tail = law.sf(hi) + acc;
    match probs.last_mut() {
        Some(last) if tail * n < min_expected => *last += tail,
        _ => {
            edges.push(u64::MAX);
            probs.push(tail);
        }
    }
    if let Some(e) = edges.last_mut() {
        *e = u64::MAX;
    }
    if probs.len() < 2 {
        return Err(Error::InvalidInput("too few samples for a binned test".into()));
    }

    let mut observed = vec![0usize; probs.len()];
    for &c in counts {
        if !(c.is_finite() && c >= 0.0 && c.fract() == 0.0) {
            return Err(Error::InvalidInput(format!("{c} is not a count")));
        }
        let k = c as u64;
        let bin = edges.partition_point(|&e| e < k);
        observed[bin] += 1;
    }
    let stat = observed
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p * n;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    Ok((stat, probs.len() - 1))
}

/// Pooled chi-square test over groups of counts sharing a known mean.
pub fn poisson_chi_square(groups: &[(f64, &[f64])]) -> Result<ChiSquareOutcome> {
    let mut statistic = 0.0;
    let mut dof = 0;
    for (mean, counts) in groups {
        let (s, d) = poisson_bins(counts, *mean)?;
        statistic += s;
        dof += d;
    }
    if dof == 0 {
        return Err(Error::InvalidInput("no degrees of freedom".into()));
    }
    let law = ChiSquared::new(dof as f64).expect("dof > 0");
    Ok(ChiSquareOutcome {
        statistic,
        dof,
        p_value: law.sf(statistic),
    })
}

/// Convenience wrapper: builds the transfer function and simulates.
pub fn simulate_with_config(
    field: &ComplexField,
    config: &OpticalConfig,
    noise: &NoiseModel,
) -> Result<IntensityImage> {
    let otf = crate::optics::build_otf(config)?;
    simulate_diffraction(field, &otf, noise)
}
