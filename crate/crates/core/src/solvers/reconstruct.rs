use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::metrics::assess;
use crate::optics::{build_otf, OpticalConfig, TransferFunction};
use crate::priors::denoiser::DenoiserEndpoint;
use crate::priors::{apply_prior_chain, PriorChain, PriorStage};
use crate::sim::IntensityImage;

use super::schedule::{detect_stationary_residuals, PriorPhase, SolveSchedule};
use super::trace::{ConvergenceTrace, TraceRecord};
use super::{backpropagate_with, hio_step, physics_fidelity_step, residual, MeasuredAmplitude};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The last prior phase reached the stationarity rule.
    Stationary,
    MaxIterations,
    /// Single-shot method, no iterations.
    SingleStep,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub field: ComplexField,
    pub trace: ConvergenceTrace,
    pub config: OpticalConfig,
    pub schedule: SolveSchedule,
    pub stop: StopReason,
    /// Denoise requests issued during the run.
    pub deep_calls: u64,
}

fn record(
    trace: &mut ConvergenceTrace,
    iter: usize,
    est: &ComplexField,
    otf: &TransferFunction,
    m: &MeasuredAmplitude,
    started: Instant,
    phase: usize,
    truth: Option<&ComplexField>,
) -> Result<()> {
    let r = residual(est, otf, m)?;
    let (ssim, psnr) = match truth {
        Some(t) => {
            let q = assess(est, t)?;
            (Some(q.ssim_phase), Some(q.psnr_phase))
        }
        None => (None, None),
    };
    trace.push(TraceRecord {
        iter,
        residual: r,
        seconds: started.elapsed().as_secs_f64(),
        phase,
        ssim,
        psnr,
    });
    Ok(())
}

/// The zero-phase backprojection packaged as a one-record result.
pub fn backprop_result(
    intensity: &IntensityImage,
    config: &OpticalConfig,
    otf: &TransferFunction,
    truth: Option<&ComplexField>,
) -> Result<ReconstructionResult> {
    let started = Instant::now();
    let field = backpropagate_with(intensity, otf)?;
    let m = MeasuredAmplitude::from_intensity(intensity);
    let mut trace = ConvergenceTrace::default();
    record(&mut trace, 0, &field, otf, &m, started, 0, truth)?;
    Ok(ReconstructionResult {
        field,
        trace,
        config: *config,
        schedule: SolveSchedule::default().max_outer_iter(1),
        stop: StopReason::SingleStep,
        deep_calls: 0,
    })
}

pub fn reconstruct(
    intensity: &IntensityImage,
    config: &OpticalConfig,
    schedule: &SolveSchedule,
    ep: Option<&mut DenoiserEndpoint>,
) -> Result<ReconstructionResult> {
    let otf = build_otf(config)?;
    reconstruct_with(intensity, config, &otf, schedule, ep, None)
}

/// Alternates the physics projection with the active prior chain.
///
/// Each prior phase runs until the residual is stationary, then hands its
/// estimate to the next phase unchanged. `truth`, when given, adds phase
/// SSIM/PSNR to every trace record.
pub fn reconstruct_with(
    intensity: &IntensityImage,
    config: &OpticalConfig,
    otf: &TransferFunction,
    schedule: &SolveSchedule,
    mut ep: Option<&mut DenoiserEndpoint>,
    truth: Option<&ComplexField>,
) -> Result<ReconstructionResult> {
    schedule.validate()?;
    crate::grid::ensure_same_dims(config.dims(), intensity.dims())?;
    crate::grid::ensure_same_dims(otf.dims(), intensity.dims())?;
    if schedule.requires_denoiser() && ep.is_none() {
        return Err(Error::InvalidSchedule(
            "schedule contains a deep prior but no denoiser endpoint was given".into(),
        ));
    }
    let calls_before = ep.as_ref().map_or(0, |e| e.calls());
    let started = Instant::now();
    let m = MeasuredAmplitude::from_intensity(intensity);

    let mut est = match &schedule.initial {
        Some(f) => {
            crate::grid::ensure_same_dims(config.dims(), f.dims())?;
            f.clone()
        }
        None => backpropagate_with(intensity, otf)?,
    };
    let mut hio_input = est.clone();
    let mut trace = ConvergenceTrace::default();
    let mut phase = 0usize;
    let mut phase_start = 0usize;
    let mut stop = StopReason::MaxIterations;

    for iter in 1..=schedule.max_outer_iter {
        let chain = &schedule.prior_phases[phase].chain;
        let step = (|| -> Result<ComplexField> {
            match schedule.hio_beta {
                Some(beta) => {
                    let s = hio_step(&hio_input, &hio_input, otf, &m, beta, |g| {
                        apply_prior_chain(g, chain, ep.as_deref_mut())
                    })?;
                    hio_input = s.next_input;
                    Ok(s.projected)
                }
                None => {
                    let g = physics_fidelity_step(&est, otf, &m)?;
                    apply_prior_chain(&g, chain, ep.as_deref_mut())
                }
            }
        })();
        est = step.map_err(|e| Error::IterationFailed {
            iteration: iter,
            source: Box::new(e),
        })?;
        if !est.all_finite() {
            return Err(Error::Diverged { iteration: iter });
        }
        record(&mut trace, iter, &est, otf, &m, started, phase, truth)?;

        let residuals: Vec<f64> = trace.records[phase_start..]
            .iter()
            .map(|r| r.residual)
            .collect();
        if detect_stationary_residuals(&residuals, schedule.stop_tol, schedule.stop_window) {
            if phase + 1 < schedule.prior_phases.len() {
                phase += 1;
                phase_start = trace.len();
                hio_input = est.clone();
            } else {
                stop = StopReason::Stationary;
                break;
            }
        }
    }

    let mut echo = schedule.clone();
    echo.initial = None;
    Ok(ReconstructionResult {
        field: est,
        trace,
        config: *config,
        schedule: echo,
        stop,
        deep_calls: ep.as_ref().map_or(0, |e| e.calls()) - calls_before,
    })
}

/// Error reduction with the pure-phase object constraint (unit amplitude).
pub fn gerchberg_saxton(
    intensity: &IntensityImage,
    config: &OpticalConfig,
    iters: usize,
) -> Result<ReconstructionResult> {
    if iters < 1 {
        return Err(Error::InvalidSchedule("gerchberg_saxton needs iters >= 1".into()));
    }
    let schedule = SolveSchedule::with_phases(vec![PriorPhase::from_start(PriorChain::new(vec![
        PriorStage::unit_amplitude(),
    ]))])
    .max_outer_iter(iters);
    reconstruct(intensity, config, &schedule, None)
}
