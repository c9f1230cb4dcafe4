//! Propagation properties checked against independent constructions.

use num_complex::Complex64;
use proptest::prelude::*;

use holoprior::optics::{build_otf, Direction, OpticalConfig};
use holoprior::ComplexField;

fn cfg(n: usize, z: f64, pitch: f64) -> OpticalConfig {
    OpticalConfig::new(670e-9, z, pitch, n, n).unwrap()
}

fn field_from(values: &[(f64, f64)], n: usize) -> ComplexField {
    ComplexField::from_fn(n, n, |x, y| {
        let (re, im) = values[(y * n + x) % values.len()];
        Complex64::new(re, im)
    })
}

fn inner(a: &ComplexField, b: &ComplexField) -> Complex64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y.conj()).sum()
}

fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Direct O(N⁴) angular-spectrum propagation with the DFT written out.
fn naive_propagate(f: &ComplexField, c: &OpticalConfig) -> ComplexField {
    let n = c.width();
    let tau = std::f64::consts::TAU;
    let freq = |k: usize| {
        let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
        k / (n as f64 * c.pixel_pitch())
    };
    let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
    for ky in 0..n {
        for kx in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..n {
                for x in 0..n {
                    let ph = -tau * ((kx * x) as f64 + (ky * y) as f64) / n as f64;
                    acc += f.get(x, y) * Complex64::from_polar(1.0, ph);
                }
            }
            let s = 1.0 - (c.wavelength() * freq(kx)).powi(2) - (c.wavelength() * freq(ky)).powi(2);
            spec[ky * n + kx] = if s > 0.0 {
                acc * Complex64::from_polar(1.0, c.wavenumber() * c.distance_z() * s.sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    ComplexField::from_fn(n, n, |x, y| {
        let mut acc = Complex64::new(0.0, 0.0);
        for ky in 0..n {
            for kx in 0..n {
                let ph = tau * ((kx * x) as f64 + (ky * y) as f64) / n as f64;
                acc += spec[ky * n + kx] * Complex64::from_polar(1.0, ph);
            }
        }
        acc / (n * n) as f64
    })
}

#[test]
fn matches_naive_dft_propagation() {
    for (z, pitch) in [(1e-3, 1.12e-6), (2e-4, 0.4e-6)] {
        let c = cfg(8, z, pitch);
        let f = ComplexField::from_fn(8, 8, |x, y| Complex64::new((x * 3 + y) as f64 % 5.0, (x + 2 * y) as f64 % 3.0));
        let fast = build_otf(&c).unwrap().propagate(&f, Direction::Forward).unwrap();
        let slow = naive_propagate(&f, &c);
        // accumulated phase k0·z·√s is ~1e4 rad, so allow its rounding
        assert!(max_diff(&fast, &slow) < 1e-8, "z={z} pitch={pitch}: {}", max_diff(&fast, &slow));
    }
}

#[test]
fn plane_wave_picks_up_carrier_phase() {
    let c = cfg(16, 1e-3, 1.12e-6);
    let f = ComplexField::filled(16, 16, Complex64::new(1.0, 0.0));
    let g = build_otf(&c).unwrap().propagate(&f, Direction::Forward).unwrap();
    let expected = Complex64::from_polar(1.0, std::f64::consts::TAU * 36.0 / 67.0);
    for v in g.as_slice() {
        assert!((v - expected).norm() < 1e-9);
    }
}

#[test]
fn evanescent_content_is_removed() {
    let c = cfg(32, 1e-4, 0.3e-6);
    let otf = build_otf(&c).unwrap();
    assert!(otf.band_mask().iter().any(|&b| !b));
    // Nyquist checkerboard has vx = vy = 1/(2·pitch), well past 1/λ.
    let f = ComplexField::from_fn(32, 32, |x, y| Complex64::new(if (x + y) % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    let g = otf.propagate(&f, Direction::Forward).unwrap();
    assert!(g.energy() < 1e-20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitary_and_invertible_on_full_band(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
        z in 0.0f64..5e-3,
    ) {
        let c = cfg(16, z, 1.12e-6);
        let otf = build_otf(&c).unwrap();
        prop_assume!(otf.band_mask().iter().all(|&b| b));
        let f = field_from(&values, 16);
        let g = otf.propagate(&f, Direction::Forward).unwrap();
        let back = otf.propagate(&g, Direction::Backward).unwrap();
        prop_assert!((g.energy() - f.energy()).abs() <= 1e-10 * f.energy().max(1e-300));
        prop_assert!(max_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn distances_compose(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
        z1 in 0.0f64..2e-3,
        z2 in 0.0f64..2e-3,
    ) {
        let f = field_from(&values, 16);
        let a = build_otf(&cfg(16, z1, 1.12e-6)).unwrap();
        let b = build_otf(&cfg(16, z2, 1.12e-6)).unwrap();
        let ab = build_otf(&cfg(16, z1 + z2, 1.12e-6)).unwrap();
        let two_steps = b.propagate(&a.propagate(&f, Direction::Forward).unwrap(), Direction::Forward).unwrap();
        let one_step = ab.propagate(&f, Direction::Forward).unwrap();
        let composed = a.compose(&b).unwrap().propagate(&f, Direction::Forward).unwrap();
        prop_assert!(max_diff(&two_steps, &one_step) < 1e-9);
        prop_assert!(max_diff(&composed, &two_steps) < 1e-9);
    }

    #[test]
    fn backward_is_the_adjoint(
        u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
        pitch in 0.3e-6f64..2e-6,
    ) {
        // holds with and without an evanescent cap
        let otf = build_otf(&cfg(16, 7e-4, pitch)).unwrap();
        let (fu, fv) = (field_from(&u, 16), field_from(&v, 16));
        let lhs = inner(&otf.propagate(&fu, Direction::Forward).unwrap(), &fv);
        let rhs = inner(&fu, &otf.propagate(&fv, Direction::Backward).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }
}
