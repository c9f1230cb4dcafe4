//! Phase retrieval for inline holograms from a single diffracted intensity
//! image.
//!
//! The building blocks are exact angular-spectrum propagation
//! ([`optics`]), object priors ([`priors`]) including total variation and
//! an out-of-process deep denoiser, projection solvers and the recurrent
//! projection/prior loop ([`solvers`]), hologram simulation ([`sim`]) and
//! quality metrics ([`metrics`]). [`app`] wires these into the
//! `holoprior` command-line tool.

pub mod app;
pub mod error;
pub mod fft;
pub mod fieldio;
pub mod grid;
pub mod metrics;
pub mod optics;
pub mod priors;
pub mod raster;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, RealImage};
pub use optics::{build_otf, Direction, OpticalConfig, TransferFunction};
pub use priors::denoiser::{DenoiserEndpoint, Transport};
pub use priors::{apply_prior_chain, Channel, PriorChain, PriorStage};
pub use sim::{IntensityImage, NoiseModel};
pub use solvers::{reconstruct, ReconstructionResult, SolveSchedule};
