//! Row-major 2-D grids shared by every stage of the pipeline.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A dense row-major 2-D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Complex wave-field at the object or sensor plane.
pub type ComplexField = Grid<Complex64>;

/// Real-valued image (amplitude, phase, grey levels, ...).
pub type RealImage = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} values supplied for a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Combines two equally sized grids elementwise.
    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl RealImage {
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl ComplexField {
    pub fn amplitude(&self) -> RealImage {
        self.map(|c| c.norm())
    }

    /// Phase wrapped into `[0, 2π)`.
    pub fn wrapped_phase(&self) -> RealImage {
        self.map(|c| wrap_phase(c.arg()))
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn from_polar(amplitude: &RealImage, phase: &RealImage) -> Result<Self> {
        amplitude.zip_map(phase, |&a, &p| Complex64::from_polar(a, p))
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = angle.rem_euclid(tau);
    // rem_euclid rounds tiny negative inputs up to exactly 2π
    if w >= tau {
        0.0
    } else {
        w
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_stays_in_half_open_range() {
        let tau = std::f64::consts::TAU;
        for a in [-1e-18, -tau, 0.0, tau, 3.0 * tau + 0.5, -0.5] {
            let w = wrap_phase(a);
            assert!((0.0..tau).contains(&w), "{a} -> {w}");
        }
        assert!((wrap_phase(-0.5) - (tau - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(RealImage::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn zip_map_checks_dims() {
        let a = RealImage::filled(2, 3, 1.0);
        let b = RealImage::filled(3, 2, 1.0);
        assert!(matches!(
            a.zip_map(&b, |x, y| x + y),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
