//! TOML run configuration. Physical quantities carry their unit in the key
//! name; every key can be overridden from the environment as
//! `HOLOPRIOR_<SECTION>__<KEY>` (e.g. `HOLOPRIOR_OPTICAL__DISTANCE_MM=0.43`).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::OpticalConfig;
use crate::priors::{Channel, PriorChain, PriorStage, TvParams};
use crate::sim::{NoiseKind, NoiseModel, PhantomMapping};
use crate::solvers::{PriorPhase, SolveSchedule};

pub const ENV_PREFIX: &str = "HOLOPRIOR_";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalSection {
    pub wavelength_nm: f64,
    pub distance_mm: f64,
    pub pixel_pitch_um: f64,
}

impl OpticalSection {
    pub fn to_config(&self, width: usize, height: usize) -> Result<OpticalConfig> {
        OpticalConfig::new(
            self.wavelength_nm * 1e-9,
            self.distance_mm * 1e-3,
            self.pixel_pitch_um * 1e-6,
            width,
            height,
        )
    }
}

impl Default for OpticalSection {
    fn default() -> Self {
        Self {
            wavelength_nm: 670.0,
            distance_mm: 1.0,
            pixel_pitch_um: 1.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    /// Grayscale PNG; takes precedence over `generator`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Built-in generator name (`cell_like`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default = "default_side")]
    pub width_px: usize,
    #[serde(default = "default_side")]
    pub height_px: usize,
    #[serde(default = "default_phantom_seed")]
    pub generator_seed: u64,
    #[serde(default = "default_mapping")]
    pub mapping: PhantomMapping,
}

fn default_side() -> usize {
    256
}

fn default_phantom_seed() -> u64 {
    1
}

fn default_mapping() -> PhantomMapping {
    PhantomMapping::PurePhase
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self {
            path: None,
            generator: Some("cell_like".into()),
            width_px: default_side(),
            height_px: default_side(),
            generator_seed: default_phantom_seed(),
            mapping: default_mapping(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    #[serde(default = "default_peak")]
    pub peak_photons: f64,
}

fn default_peak() -> f64 {
    NoiseModel::DEFAULT_PEAK_PHOTONS
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Poisson,
            peak_photons: default_peak(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub max_outer_iter: usize,
    pub stop_tol: f64,
    pub stop_window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hio_beta: Option<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let s = SolveSchedule::default();
        Self {
            max_outer_iter: s.max_outer_iter,
            stop_tol: s.stop_tol,
            stop_window: s.stop_window,
            hio_beta: None,
        }
    }
}

/// TV weights for each channel. Phase is in radians, amplitude is
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TvSection {
    pub amplitude_weight: f64,
    pub phase_weight: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TvSection {
    fn default() -> Self {
        Self {
            amplitude_weight: DEFAULT_TV_AMPLITUDE_WEIGHT,
            phase_weight: DEFAULT_TV_PHASE_WEIGHT,
            max_iter: 50,
            tol: 1e-4,
        }
    }
}

/// Tuned on the 256² cell-like phantom at 670 nm / 1 mm / 1.12 µm with
/// Poisson noise at 1e4 peak photons.
pub const DEFAULT_TV_AMPLITUDE_WEIGHT: f64 = 0.05;
pub const DEFAULT_TV_PHASE_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeepSection {
    /// Noise-level hint in grey levels out of 255.
    pub sigma: f64,
}

impl Default for DeepSection {
    fn default() -> Self {
        Self { sigma: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiserSection {
    /// `host:port` or a command line speaking the protocol on stdio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    60.0
}

impl Default for DenoiserSection {
    fn default() -> Self {
        Self {
            endpoint: None,
            timeout_s: default_timeout(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Measurement consumed by `reconstruct` (defaults to
    /// `<out_dir>/measurement.ifld`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<PathBuf>,
    /// Optional ground truth for per-iteration metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single zero-phase angular-spectrum backprojection.
    Backprop,
    /// Error reduction with the unit-amplitude object constraint.
    Gs,
    /// Plain error reduction, no prior.
    Er,
    /// Error reduction with TV on amplitude and phase.
    ErTv,
    /// Error reduction with the deep denoiser on amplitude and phase.
    PhyZsn,
    /// TV until stationary, then cascaded TV and deep denoiser.
    PhytvZsn,
    /// Hybrid input-output with the unit-amplitude constraint.
    HioGs,
    /// Hybrid input-output with TV.
    HioErTv,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Backprop,
        Method::Gs,
        Method::Er,
        Method::ErTv,
        Method::PhyZsn,
        Method::PhytvZsn,
        Method::HioGs,
        Method::HioErTv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Backprop => "backprop",
            Method::Gs => "gs",
            Method::Er => "er",
            Method::ErTv => "er_tv",
            Method::PhyZsn => "phy_zsn",
            Method::PhytvZsn => "phytv_zsn",
            Method::HioGs => "hio_gs",
            Method::HioErTv => "hio_er_tv",
        }
    }

    pub fn needs_denoiser(self) -> bool {
        matches!(self, Method::PhyZsn | Method::PhytvZsn)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Prior parameters shared by the method presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub tv: TvSection,
    pub deep: DeepSection,
}

impl Default for PriorParams {
    fn default() -> Self {
        Self {
            tv: TvSection::default(),
            deep: DeepSection::default(),
        }
    }
}

impl PriorParams {
    fn tv_stages(&self) -> Vec<PriorStage> {
        let p = |weight| TvParams {
            weight,
            max_iter: self.tv.max_iter,
            tol: self.tv.tol,
        };
        vec![
            PriorStage::tv_with(p(self.tv.amplitude_weight), Channel::Amplitude),
            PriorStage::tv_with(p(self.tv.phase_weight), Channel::Phase),
        ]
    }

    fn deep_stage(&self) -> PriorStage {
        PriorStage::deep(self.deep.sigma, Channel::Both)
    }
}

/// Default HIO feedback when a `hio_*` method is chosen without `hio_beta`.
pub const DEFAULT_HIO_BETA: f64 = 0.9;

/// Builds the solver schedule for a method preset. `None` for the
/// single-shot backprojection.
pub fn method_schedule(
    method: Method,
    priors: &PriorParams,
    sched: &ScheduleSection,
) -> Option<SolveSchedule> {
    let tv = PriorChain::new(priors.tv_stages());
    let phases = match method {
        Method::Backprop => return None,
        Method::Er => vec![PriorPhase::from_start(PriorChain::empty())],
        Method::Gs | Method::HioGs => vec![PriorPhase::from_start(PriorChain::new(vec![
            PriorStage::unit_amplitude(),
        ]))],
        Method::ErTv | Method::HioErTv => vec![PriorPhase::from_start(tv.clone())],
        Method::PhyZsn => vec![PriorPhase::from_start(PriorChain::new(vec![
            priors.deep_stage(),
        ]))],
        Method::PhytvZsn => vec![
            PriorPhase::from_start(tv.clone()),
            PriorPhase::after_stationary(tv.then(priors.deep_stage())),
        ],
    };
    let hio_beta = match method {
        Method::HioGs | Method::HioErTv => Some(sched.hio_beta.unwrap_or(DEFAULT_HIO_BETA)),
        _ => sched.hio_beta,
    };
    Some(SolveSchedule {
        max_outer_iter: sched.max_outer_iter,
        stop_tol: sched.stop_tol,
        stop_window: sched.stop_window,
        prior_phases: phases,
        hio_beta,
        initial: None,
    })
}

/// Everything one `simulate` or `reconstruct` invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub optical: OpticalSection,
    #[serde(default)]
    pub phantom: PhantomSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub tv: TvSection,
    #[serde(default)]
    pub deep: DeepSection,
    #[serde(default)]
    pub denoiser: DenoiserSection,
    #[serde(default)]
    pub paths: PathsSection,
}

fn default_method() -> Method {
    Method::ErTv
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all sections default")
    }
}

impl RunConfig {
    pub fn priors(&self) -> PriorParams {
        PriorParams {
            tv: self.tv,
            deep: self.deep,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            kind: self.noise.kind,
            peak_photons: self.noise.peak_photons,
            seed: self.seed,
        }
    }

    pub fn schedule(&self) -> Option<SolveSchedule> {
        method_schedule(self.method, &self.priors(), &self.schedule)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn measurement_path(&self) -> PathBuf {
        self.paths
            .measurement
            .clone()
            .unwrap_or_else(|| self.out_dir().join(super::MEASUREMENT_FILE))
    }

    /// Makes relative paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.phantom.path);
        fix(&mut self.paths.out_dir);
        fix(&mut self.paths.measurement);
        fix(&mut self.paths.truth);
    }

    pub fn validate(&self) -> Result<()> {
        self.optical.to_config(2, 2)?;
        self.noise_model().validate()?;
        if self.denoiser.timeout_s <= 0.0 || !self.denoiser.timeout_s.is_finite() {
            return Err(Error::Config(format!(
                "denoiser.timeout_s must be > 0, got {}",
                self.denoiser.timeout_s
            )));
        }
        if let Some(s) = self.schedule() {
            s.validate()?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `text` after applying environment overrides from `env`.
pub fn parse_with_overrides<T: serde::de::DeserializeOwned>(
    text: &str,
    env: impl IntoIterator<Item = (String, String)>,
    origin: &str,
) -> Result<T> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    for (key, raw) in env {
        let Some(path) = key.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let parts: Vec<String> = path.split("__").map(|p| p.to_ascii_lowercase()).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed override variable {key}")));
        }
        set_path(&mut table, &parts, parse_env_value(&raw), &key)?;
    }
    T::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(format!("{origin}: {e}")))
}

fn parse_env_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, parts: &[String], value: toml::Value, key: &str) -> Result<()> {
    let (last, parents) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: `{p}` is not a section")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Reads a config file with `HOLOPRIOR_*` overrides and resolves relative
/// paths against the file's directory.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: RunConfig = parse_with_overrides(&text, std::env::vars(), &path.display().to_string())?;
    cfg.resolve_paths(path.parent().unwrap_or_else(|| Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}
