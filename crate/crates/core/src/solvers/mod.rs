//! Physics-fidelity projections, baselines and the recurrent
//! projection/prior loop.

mod reconstruct;
mod schedule;
mod trace;

pub use reconstruct::{
    backprop_result, gerchberg_saxton, reconstruct, reconstruct_with, ReconstructionResult,
    StopReason,
};
pub use schedule::{detect_stationary, detect_stationary_residuals, Activation, PriorPhase, SolveSchedule};
pub use trace::{ConvergenceTrace, TraceRecord};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_dims, ComplexField, RealImage};
use crate::optics::{build_otf, Direction, OpticalConfig, TransferFunction};
use crate::sim::IntensityImage;

/// Sensor-plane amplitude constraint, `sqrt(I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredAmplitude(RealImage);

impl MeasuredAmplitude {
    pub fn from_intensity(intensity: &IntensityImage) -> Self {
        Self(intensity.image().map(|v| v.sqrt()))
    }

    pub fn new(amplitude: RealImage) -> Result<Self> {
        if let Some(v) = amplitude
            .as_slice()
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "measured amplitude must be finite and >= 0, found {v}"
            )));
        }
        Ok(Self(amplitude))
    }

    pub fn image(&self) -> &RealImage {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

/// Keeps the phase of `sensor` and imposes the measured amplitude. A zero
/// sample is given phase 0.
fn replace_amplitude(sensor: &ComplexField, m: &MeasuredAmplitude) -> Result<ComplexField> {
    sensor.zip_map(m.image(), |g, &a| {
        if g.norm_sqr() == 0.0 {
            Complex64::new(a, 0.0)
        } else {
            Complex64::from_polar(a, g.arg())
        }
    })
}

/// One error-reduction projection: propagate to the sensor, impose the
/// measured amplitude, propagate back.
pub fn physics_fidelity_step(
    est: &ComplexField,
    otf: &TransferFunction,
    m: &MeasuredAmplitude,
) -> Result<ComplexField> {
    ensure_same_dims(otf.dims(), m.dims())?;
    let sensor = otf.propagate(est, Direction::Forward)?;
    let constrained = replace_amplitude(&sensor, m)?;
    otf.propagate(&constrained, Direction::Backward)
}

/// RMS mismatch between the propagated amplitude and the measurement.
pub fn residual(est: &ComplexField, otf: &TransferFunction, m: &MeasuredAmplitude) -> Result<f64> {
    ensure_same_dims(otf.dims(), m.dims())?;
    let sensor = otf.propagate(est, Direction::Forward)?;
    let sum: f64 = sensor
        .as_slice()
        .iter()
        .zip(m.image().as_slice())
        .map(|(g, a)| (g.norm() - a).powi(2))
        .sum();
    Ok((sum / sensor.len() as f64).sqrt())
}

/// Relative agreement below which a pixel counts as satisfying the
/// object-domain constraint in [`hio_step`].
pub const HIO_AGREEMENT: f64 = 0.05;
const HIO_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HioStep {
    /// Input for the next iteration.
    pub next_input: ComplexField,
    /// Error-reduction output before the object constraint.
    pub er_output: ComplexField,
    /// `er_output` after the object constraint.
    pub projected: ComplexField,
    /// Number of pixels where the constraint held.
    pub satisfied: usize,
}

/// Hybrid input-output update.
///
/// `est` feeds the physics projection; `project` is the object-domain
/// constraint (usually the active prior chain). Where the projection
/// changes the error-reduction output `g` by less than [`HIO_AGREEMENT`]
/// relative, the next input is `project(g)`; elsewhere it is
/// `prev_input + beta·(project(g) − g)`. For a support constraint this is
/// the classic update: `g` inside the support, `prev_input − beta·g` outside.
pub fn hio_step(
    est: &ComplexField,
    prev_input: &ComplexField,
    otf: &TransferFunction,
    m: &MeasuredAmplitude,
    beta: f64,
    project: impl FnOnce(&ComplexField) -> Result<ComplexField>,
) -> Result<HioStep> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidSchedule(format!("hio beta must lie in (0, 1], got {beta}")));
    }
    ensure_same_dims(est.dims(), prev_input.dims())?;
    let er_output = physics_fidelity_step(est, otf, m)?;
    let projected = project(&er_output)?;
    ensure_same_dims(er_output.dims(), projected.dims())?;
    let mut satisfied = 0;
    let next = er_output
        .as_slice()
        .iter()
        .zip(projected.as_slice())
        .zip(prev_input.as_slice())
        .map(|((g, p), prev)| {
            if (p - g).norm() / g.norm().max(HIO_EPS) < HIO_AGREEMENT {
                satisfied += 1;
                *p
            } else {
                prev + beta * (p - g)
            }
        })
        .collect();
    Ok(HioStep {
        next_input: ComplexField::from_vec(est.width(), est.height(), next)?,
        er_output,
        projected,
        satisfied,
    })
}

/// Zero-phase backprojection of the measured amplitude.
pub fn backpropagate_with(intensity: &IntensityImage, otf: &TransferFunction) -> Result<ComplexField> {
    let m = MeasuredAmplitude::from_intensity(intensity);
    let sensor = m.image().map(|&a| Complex64::new(a, 0.0));
    otf.propagate(&sensor, Direction::Backward)
}

pub fn backpropagate_once(intensity: &IntensityImage, config: &OpticalConfig) -> Result<ComplexField> {
    backpropagate_with(intensity, &build_otf(config)?)
}
