//! Object priors applied between physics projections.
//!
//! A [`PriorChain`] is an ordered list of stages, each acting on the
//! amplitude channel, the wrapped phase channel, or both. Deep stages go
//! through the external denoiser with per-channel min-max scaling to
//! `[0, 255]`.

pub mod denoiser;
pub mod scaling;
pub mod tv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealImage};
use denoiser::{deep_denoise, DenoiserEndpoint, MAX_SIGMA};
use scaling::{scale_to_display, ScaleParams};
pub use tv::{total_variation, tv_denoise, TvParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Amplitude,
    Phase,
    Both,
}

impl Channel {
    fn amplitude(self) -> bool {
        matches!(self, Channel::Amplitude | Channel::Both)
    }

    fn phase(self) -> bool {
        matches!(self, Channel::Phase | Channel::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    Identity,
    Tv(TvParams),
    Deep { sigma: f64 },
    /// Forces unit amplitude (pure-phase object constraint). Ignores the
    /// phase channel.
    UnitAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorStage {
    #[serde(flatten)]
    pub kind: PriorKind,
    pub target: Channel,
}

impl PriorStage {
    pub fn tv(weight: f64, target: Channel) -> Self {
        Self {
            kind: PriorKind::Tv(TvParams::new(weight)),
            target,
        }
    }

    pub fn tv_with(params: TvParams, target: Channel) -> Self {
        Self {
            kind: PriorKind::Tv(params),
            target,
        }
    }

    pub fn deep(sigma: f64, target: Channel) -> Self {
        Self {
            kind: PriorKind::Deep { sigma },
            target,
        }
    }

    pub fn unit_amplitude() -> Self {
        Self {
            kind: PriorKind::UnitAmplitude,
            target: Channel::Amplitude,
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: PriorKind::Identity,
            target: Channel::Both,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorChain {
    pub stages: Vec<PriorStage>,
}

impl PriorChain {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(stages: Vec<PriorStage>) -> Self {
        Self { stages }
    }

    pub fn then(mut self, stage: PriorStage) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn requires_denoiser(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s.kind, PriorKind::Deep { .. }))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.stages.iter().enumerate() {
            match s.kind {
                PriorKind::Tv(p) => {
                    if !(p.weight.is_finite() && p.weight >= 0.0) {
                        return Err(Error::InvalidPrior(format!(
                            "stage {i}: tv weight must be >= 0, got {}",
                            p.weight
                        )));
                    }
                    if !(p.tol.is_finite() && p.tol >= 0.0) {
                        return Err(Error::InvalidPrior(format!(
                            "stage {i}: tv tol must be >= 0, got {}",
                            p.tol
                        )));
                    }
                }
                PriorKind::Deep { sigma } => {
                    if !(0.0..=MAX_SIGMA).contains(&sigma) {
                        return Err(Error::InvalidPrior(format!(
                            "stage {i}: sigma must lie in [0, {MAX_SIGMA}], got {sigma}"
                        )));
                    }
                }
                PriorKind::Identity | PriorKind::UnitAmplitude => {}
            }
        }
        Ok(())
    }
}

/// Runs one channel through the denoiser: scale to `[0, 255]`, denoise,
/// map back. Pixels the denoiser leaves untouched keep their exact value.
pub fn deep_prior_channel(
    channel: &RealImage,
    sigma: f64,
    ep: &mut DenoiserEndpoint,
) -> Result<RealImage> {
    let (scaled, params): (RealImage, ScaleParams) = scale_to_display(channel);
    let denoised = deep_denoise(&scaled, sigma, ep)?;
    let out = channel
        .as_slice()
        .iter()
        .zip(scaled.as_slice())
        .zip(denoised.as_slice())
        .map(|((&orig, s), d)| {
            if d.to_bits() == s.to_bits() {
                orig
            } else {
                params.unscale_value(*d)
            }
        })
        .collect();
    RealImage::from_vec(channel.width(), channel.height(), out)
}

fn apply_stage(
    stage: &PriorStage,
    channel: &mut RealImage,
    ep: &mut Option<&mut DenoiserEndpoint>,
) -> Result<()> {
    match stage.kind {
        PriorKind::Identity | PriorKind::UnitAmplitude => {}
        PriorKind::Tv(p) => *channel = tv_denoise(channel, p.weight, p.max_iter, p.tol),
        PriorKind::Deep { sigma } => {
            let ep = ep.as_deref_mut().ok_or_else(|| {
                Error::InvalidPrior("deep prior stage needs a denoiser endpoint".into())
            })?;
            *channel = deep_prior_channel(channel, sigma, ep)?;
        }
    }
    Ok(())
}

/// Applies `chain` to the amplitude and wrapped phase of `field` and
/// recombines them. Pixels whose amplitude and phase both come back
/// unchanged keep their original complex value.
pub fn apply_prior_chain(
    field: &ComplexField,
    chain: &PriorChain,
    mut ep: Option<&mut DenoiserEndpoint>,
) -> Result<ComplexField> {
    if chain.is_empty() {
        return Ok(field.clone());
    }
    chain.validate()?;
    let amplitude0 = field.amplitude();
    let phase0 = field.wrapped_phase();
    let mut amplitude = amplitude0.clone();
    let mut phase = phase0.clone();

    for stage in &chain.stages {
        if stage.kind == PriorKind::UnitAmplitude {
            amplitude.as_mut_slice().fill(1.0);
            continue;
        }
        if stage.target.amplitude() {
            apply_stage(stage, &mut amplitude, &mut ep)?;
        }
        if stage.target.phase() {
            apply_stage(stage, &mut phase, &mut ep)?;
        }
    }

    let mut out = field.clone();
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        let (a, p) = (amplitude.as_slice()[i], phase.as_slice()[i]);
        if a.to_bits() != amplitude0.as_slice()[i].to_bits()
            || p.to_bits() != phase0.as_slice()[i].to_bits()
        {
            *v = num_complex::Complex64::from_polar(a, p);
        }
    }
    Ok(out)
}
