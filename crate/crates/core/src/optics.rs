//! Free-space angular-spectrum propagation between object and sensor planes.
//!
//! The transfer function is phase-only inside the propagating disc
//! `vx² + vy² < 1/λ²` and zero outside it. Spectra are kept in standard
//! DFT ordering (DC first); nothing here is fft-shifted.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{ensure_same_dims, ComplexField};

/// Free space only.
pub const REFRACTIVE_INDEX: f64 = 1.0;

/// Geometry and illumination of an inline hologram. All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    wavelength: f64,
    distance_z: f64,
    pixel_pitch: f64,
    width: usize,
    height: usize,
}

impl OpticalConfig {
    pub fn new(
        wavelength: f64,
        distance_z: f64,
        pixel_pitch: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be > 0, got {wavelength}"
            )));
        }
        if !(distance_z.is_finite() && distance_z >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "distance_z must be >= 0, got {distance_z}"
            )));
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pixel_pitch must be > 0, got {pixel_pitch}"
            )));
        }
        if width < 2 || height < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(Self {
            wavelength,
            distance_z,
            pixel_pitch,
            width,
            height,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn distance_z(&self) -> f64 {
        self.distance_z
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// `k0 = 2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn refractive_index(&self) -> f64 {
        REFRACTIVE_INDEX
    }

    pub fn with_distance(&self, distance_z: f64) -> Result<Self> {
        Self::new(
            self.wavelength,
            distance_z,
            self.pixel_pitch,
            self.width,
            self.height,
        )
    }
}

/// Spatial-frequency sample axes (cycles per meter) in DFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    vx: Vec<f64>,
    vy: Vec<f64>,
}

impl FrequencyGrid {
    pub fn vx(&self) -> &[f64] {
        &self.vx
    }

    pub fn vy(&self) -> &[f64] {
        &self.vy
    }

    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        (self.vx[x], self.vy[y])
    }

    pub fn max_abs_vx(&self) -> f64 {
        self.vx.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_vy(&self) -> f64 {
        self.vy.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn frequency_grid(config: &OpticalConfig) -> FrequencyGrid {
    FrequencyGrid {
        vx: dft_frequencies(config.width, config.pixel_pitch),
        vy: dft_frequencies(config.height, config.pixel_pitch),
    }
}

fn dft_frequencies(n: usize, pitch: f64) -> Vec<f64> {
    let span = n as f64 * pitch;
    (0..n)
        .map(|k| {
            let signed = if k < n.div_ceil(2) {
                k as isize
            } else {
                k as isize - n as isize
            };
            signed as f64 / span
        })
        .collect()
}

/// `(λvx)² + (λvy)² < 1`, the strict propagating-band test.
fn in_band(wavelength: f64, vx: f64, vy: f64) -> Option<f64> {
    let (ax, ay) = (wavelength * vx, wavelength * vy);
    let s = 1.0 - ax * ax - ay * ay;
    (s > 0.0).then_some(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Object plane to sensor plane.
    Forward,
    /// Sensor plane back to the object plane.
    Backward,
}

/// Band-limited, phase-only optical transfer function for one geometry.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
    band_mask: Vec<bool>,
    fft: Fft2,
}

pub fn build_otf(config: &OpticalConfig) -> Result<TransferFunction> {
    let freqs = frequency_grid(config);
    let cycles_per_unit = config.distance_z / config.wavelength;
    let n = config.width * config.height;
    let mut values = Vec::with_capacity(n);
    let mut band_mask = Vec::with_capacity(n);
    for &vy in freqs.vy() {
        for &vx in freqs.vx() {
            match in_band(config.wavelength, vx, vy) {
                Some(s) => {
                    // k0·z·√s reduced mod 2π in cycles to keep the phase exact
                    let phase = TAU * (cycles_per_unit * s.sqrt()).fract();
                    let h = Complex64::from_polar(1.0, phase);
                    if !(h.re.is_finite() && h.im.is_finite()) {
                        return Err(Error::InvalidConfig(format!(
                            "non-finite transfer function at v=({vx}, {vy})"
                        )));
                    }
                    values.push(h);
                    band_mask.push(true);
                }
                None => {
                    values.push(Complex64::new(0.0, 0.0));
                    band_mask.push(false);
                }
            }
        }
    }
    Ok(TransferFunction {
        width: config.width,
        height: config.height,
        values,
        band_mask,
        fft: Fft2::new(config.width, config.height),
    })
}

impl TransferFunction {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn band_mask(&self) -> &[bool] {
        &self.band_mask
    }

    /// Value at integer frequency index `(kx, ky)` in DFT ordering.
    pub fn at(&self, kx: usize, ky: usize) -> Complex64 {
        self.values[ky * self.width + kx]
    }

    /// Product of two transfer functions, i.e. propagation over the sum of
    /// both distances.
    pub fn compose(&self, other: &TransferFunction) -> Result<TransferFunction> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(TransferFunction {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            band_mask: self
                .band_mask
                .iter()
                .zip(&other.band_mask)
                .map(|(a, b)| *a && *b)
                .collect(),
            fft: self.fft.clone(),
        })
    }

    pub fn spectrum(&self, field: &ComplexField) -> Result<Vec<Complex64>> {
        ensure_same_dims(self.dims(), field.dims())?;
        let mut buf = field.as_slice().to_vec();
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    /// Zeroes every out-of-band frequency of `field`.
    pub fn band_limit(&self, field: &ComplexField) -> Result<ComplexField> {
        let mut spec = self.spectrum(field)?;
        for (v, &inside) in spec.iter_mut().zip(&self.band_mask) {
            if !inside {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.fft.inverse(&mut spec);
        ComplexField::from_vec(self.width, self.height, spec)
    }

    pub fn propagate(&self, field: &ComplexField, direction: Direction) -> Result<ComplexField> {
        let mut spec = self.spectrum(field)?;
        match direction {
            Direction::Forward => {
                for (v, h) in spec.iter_mut().zip(&self.values) {
                    *v *= h;
                }
            }
            // conj(H) equals 1/H in band and is already 0 out of band
            Direction::Backward => {
                for (v, h) in spec.iter_mut().zip(&self.values) {
                    *v *= h.conj();
                }
            }
        }
        self.fft.inverse(&mut spec);
        ComplexField::from_vec(self.width, self.height, spec)
    }
}

pub fn propagate(
    field: &ComplexField,
    otf: &TransferFunction,
    direction: Direction,
) -> Result<ComplexField> {
    otf.propagate(field, direction)
}

/// Outcome of checking sampled frequencies against the evanescent cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingStatus {
    Ok,
    /// Some samples lie outside the propagating band and will be zeroed.
    Capped { fraction_evanescent: f64 },
}

impl SamplingStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, SamplingStatus::Ok)
    }
}

pub fn validate_sampling(config: &OpticalConfig) -> SamplingStatus {
    let freqs = frequency_grid(config);
    let mut outside = 0usize;
    for &vy in freqs.vy() {
        for &vx in freqs.vx() {
            if in_band(config.wavelength, vx, vy).is_none() {
                outside += 1;
            }
        }
    }
    if outside == 0 {
        SamplingStatus::Ok
    } else {
        SamplingStatus::Capped {
            fraction_evanescent: outside as f64 / (config.width * config.height) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: usize, pitch: f64) -> OpticalConfig {
        OpticalConfig::new(670e-9, 1e-3, pitch, n, n).unwrap()
    }

    #[test]
    fn config_rejects_invalid_values() {
        assert!(OpticalConfig::new(0.0, 1e-3, 1e-6, 8, 8).is_err());
        assert!(OpticalConfig::new(1e-6, -1.0, 1e-6, 8, 8).is_err());
        assert!(OpticalConfig::new(1e-6, 1.0, 0.0, 8, 8).is_err());
        assert!(OpticalConfig::new(1e-6, 1.0, 1e-6, 1, 8).is_err());
        assert!(OpticalConfig::new(f64::NAN, 1.0, 1e-6, 8, 8).is_err());
        assert_eq!(cfg(4, 1e-6).refractive_index(), 1.0);
    }

    #[test]
    fn two_and_four_point_orderings() {
        assert_eq!(frequency_grid(&cfg(2, 1.0)).vx(), &[0.0, -0.5]);
        assert_eq!(frequency_grid(&cfg(4, 1.0)).vx(), &[0.0, 0.25, -0.5, -0.25]);
        let odd = OpticalConfig::new(1.0, 0.0, 1.0, 3, 5).unwrap();
        let g = frequency_grid(&odd);
        assert_relative_eq!(g.vx()[1], 1.0 / 3.0);
        assert_relative_eq!(g.vx()[2], -1.0 / 3.0);
        assert_eq!(g.vy().len(), 5);
    }

    #[test]
    fn nyquist_for_sensor_pitch() {
        let g = frequency_grid(&cfg(256, 1.12e-6));
        assert_relative_eq!(g.max_abs_vx(), 4.464_285_714_285_714e5, max_relative = 1e-12);
        for v in g.vx() {
            assert!(*v >= -1.0 / (2.0 * 1.12e-6) && *v < 1.0 / (2.0 * 1.12e-6));
        }
    }

    #[test]
    fn dc_value_is_unit_phasor() {
        let otf = build_otf(&cfg(8, 1.12e-6)).unwrap();
        let h = otf.at(0, 0);
        assert_relative_eq!(h.norm(), 1.0, epsilon = 1e-15);
        // z/λ = 100000/67 cycles, fractional part 36/67
        let expected = TAU * 36.0 / 67.0;
        assert!((h.arg().rem_euclid(TAU) - expected).abs() < 1e-9);
        assert!((expected - 3.3761).abs() < 1e-4);
    }

    #[test]
    fn band_edge_is_excluded() {
        // pitch λ/2 puts the -N/2 sample exactly on vx = 1/λ
        let lambda = 1.0;
        let c = OpticalConfig::new(lambda, 3.0, 0.5, 4, 4).unwrap();
        let otf = build_otf(&c).unwrap();
        let g = frequency_grid(&c);
        assert_eq!(g.vx()[2], -1.0);
        assert_eq!(otf.at(2, 0), Complex64::new(0.0, 0.0));
        assert!(!otf.band_mask()[2]);
    }

    #[test]
    fn zero_distance_is_identity_in_band() {
        let c = OpticalConfig::new(670e-9, 0.0, 1.12e-6, 16, 8).unwrap();
        let otf = build_otf(&c).unwrap();
        let f = ComplexField::from_fn(16, 8, |x, y| {
            Complex64::new((x as f64 * 0.3).cos(), (y as f64).sin())
        });
        let g = otf.propagate(&f, Direction::Forward).unwrap();
        for (a, b) in g.as_slice().iter().zip(f.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn propagate_rejects_mismatched_field() {
        let otf = build_otf(&cfg(8, 1.12e-6)).unwrap();
        let f = ComplexField::filled(4, 8, Complex64::new(1.0, 0.0));
        assert!(matches!(
            otf.propagate(&f, Direction::Forward),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampling_checks() {
        assert!(validate_sampling(&cfg(64, 1.12e-6)).is_ok());
        match validate_sampling(&cfg(64, 0.2e-6)) {
            SamplingStatus::Capped { fraction_evanescent } => {
                assert!(fraction_evanescent > 0.0 && fraction_evanescent < 1.0)
            }
            SamplingStatus::Ok => panic!("expected capped"),
        }
        let long = OpticalConfig::new(1.0, 1.0, 1e-6, 16, 16).unwrap();
        match validate_sampling(&long) {
            SamplingStatus::Capped { fraction_evanescent } => {
                assert_relative_eq!(fraction_evanescent, 255.0 / 256.0)
            }
            SamplingStatus::Ok => panic!("expected capped"),
        }
    }
}
