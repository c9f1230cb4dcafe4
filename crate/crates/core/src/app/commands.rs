use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::config::{Method, PhantomSection, RunConfig};
use super::*;
use crate::error::{Error, Result};
use crate::fieldio::{read_complex, read_real, write_complex, write_real};
use crate::grid::{ComplexField, RealImage};
use crate::metrics::{assess, phase_display, QualityReport};
use crate::optics::{build_otf, validate_sampling, SamplingStatus};
use crate::priors::denoiser::{DenoiserEndpoint, Transport};
use crate::raster::{read_grayscale, to_display_range, write_gray16, write_gray8};
use crate::sim::{cell_like_phantom, make_phantom, simulate_diffraction, IntensityImage};
use crate::solvers::{backprop_result, reconstruct_with, ReconstructionResult};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Grey-level phantom image in `[0, 255]`.
pub fn load_phantom_gray(p: &PhantomSection) -> Result<RealImage> {
    if let Some(path) = &p.path {
        return read_grayscale(path);
    }
    match p.generator.as_deref() {
        Some("cell_like") | None => {
            if p.width_px < 2 || p.height_px < 2 {
                return Err(Error::Config(format!(
                    "phantom.width_px/height_px must be >= 2, got {}x{}",
                    p.width_px, p.height_px
                )));
            }
            Ok(cell_like_phantom(p.width_px, p.height_px, p.generator_seed))
        }
        Some(other) => Err(Error::Config(format!(
            "phantom.generator: unknown generator `{other}` (expected `cell_like`)"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub measurement: PathBuf,
    pub truth: PathBuf,
    pub sidecar: PathBuf,
    pub sampling: SamplingStatus,
    pub intensity: IntensityImage,
    pub field: ComplexField,
}

/// Builds the phantom field and its simulated measurement without touching
/// the file system.
pub fn simulate_in_memory(cfg: &RunConfig) -> Result<(ComplexField, IntensityImage, SamplingStatus)> {
    let gray = load_phantom_gray(&cfg.phantom)?;
    let field = make_phantom(&gray, cfg.phantom.mapping)?;
    let optical = cfg.optical.to_config(gray.width(), gray.height())?;
    let sampling = validate_sampling(&optical);
    let otf = build_otf(&optical)?;
    let intensity = simulate_diffraction(&field, &otf, &cfg.noise_model())?;
    Ok((field, intensity, sampling))
}

/// Writes the measurement, ground truth, a preview raster and a sidecar
/// config that reproduces the run.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let (field, intensity, sampling) = simulate_in_memory(cfg)?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let measurement = dir.join(MEASUREMENT_FILE);
    let truth = dir.join(TRUTH_FILE);
    write_real(&measurement, intensity.image())?;
    write_complex(&truth, &field)?;
    write_gray16(dir.join(MEASUREMENT_PNG), &to_display_range(intensity.image()))?;

    let mut sidecar_cfg = cfg.clone();
    sidecar_cfg.paths.out_dir = Some(absolute(&dir));
    sidecar_cfg.paths.measurement = Some(absolute(&measurement));
    sidecar_cfg.paths.truth = Some(absolute(&truth));
    let sidecar = dir.join(SIMULATE_SIDECAR);
    write_text(&sidecar, &sidecar_cfg.to_toml()?)?;
    Ok(SimulateOutput {
        measurement,
        truth,
        sidecar,
        sampling,
        intensity,
        field,
    })
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Opens the configured denoiser, with a remediation hint on failure.
pub fn connect_denoiser(cfg: &RunConfig) -> Result<DenoiserEndpoint> {
    let Some(desc) = cfg.denoiser.endpoint.as_deref() else {
        return Err(Error::Config(format!(
            "method `{}` needs a denoiser: set denoiser.endpoint or pass --denoiser <cmd|host:port> \
             (`holoprior serve-reference --backend identity` is a test server)",
            cfg.method
        )));
    };
    let transport: Transport = desc.parse()?;
    DenoiserEndpoint::connect(&transport, Duration::from_secs_f64(cfg.denoiser.timeout_s)).map_err(|e| {
        Error::Config(format!(
            "denoiser `{desc}` is unreachable ({e}); start the server or point --denoiser at a \
             running one"
        ))
    })
}

/// Runs the configured method on `intensity`, scoring against `truth` per
/// iteration when given.
pub fn run_method(
    cfg: &RunConfig,
    intensity: &IntensityImage,
    truth: Option<&ComplexField>,
    ep: Option<&mut DenoiserEndpoint>,
) -> Result<ReconstructionResult> {
    let (w, h) = intensity.dims();
    let optical = cfg.optical.to_config(w, h)?;
    let otf = build_otf(&optical)?;
    match cfg.schedule() {
        None => backprop_result(intensity, &optical, &otf, truth),
        Some(schedule) => reconstruct_with(intensity, &optical, &otf, &schedule, ep, truth),
    }
}

#[derive(Debug)]
pub struct ReconstructOutput {
    pub result: ReconstructionResult,
    pub files: Vec<PathBuf>,
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<ReconstructOutput> {
    cfg.validate()?;
    let measurement_path = cfg.measurement_path();
    let intensity = IntensityImage::new(read_real(&measurement_path)?)?;
    let truth = match &cfg.paths.truth {
        Some(p) if p.exists() => Some(read_complex(p)?),
        _ => None,
    };
    let mut ep = if cfg.method.needs_denoiser() {
        Some(connect_denoiser(cfg)?)
    } else {
        None
    };
    let result = run_method(cfg, &intensity, truth.as_ref(), ep.as_mut())?;

    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let files: Vec<PathBuf> = [RECON_FILE, RECON_AMPLITUDE_PNG, RECON_PHASE_PNG, TRACE_FILE, RECONSTRUCT_SIDECAR]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_complex(&files[0], &result.field)?;
    write_gray16(&files[1], &to_display_range(&result.field.amplitude()))?;
    // [0, 2π) maps linearly onto [0, 255].
    write_gray8(&files[2], &phase_display(&result.field))?;
    result.trace.write_csv(&files[3])?;
    let mut sidecar = cfg.clone();
    sidecar.paths.measurement = Some(absolute(&measurement_path));
    sidecar.paths.out_dir = Some(absolute(&dir));
    write_text(&files[4], &sidecar.to_toml()?)?;
    Ok(ReconstructOutput { result, files })
}

#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub recon: PathBuf,
    pub truth: PathBuf,
    pub report: QualityReport,
}

impl EvaluateOutput {
    pub fn summary(&self) -> String {
        use crate::metrics::format_db;
        let r = &self.report;
        format!(
            "phase      ssim {:.4}  psnr {} dB\namplitude  ssim {:.4}  psnr {} dB",
            r.ssim_phase,
            format_db(r.psnr_phase),
            r.ssim_amplitude,
            format_db(r.psnr_amplitude)
        )
    }
}

/// Scores a reconstructed field against the truth and writes
/// `metrics.json` into `out_dir` when given.
pub fn cmd_evaluate(recon: &Path, truth: &Path, out_dir: Option<&Path>) -> Result<EvaluateOutput> {
    let est = read_complex(recon)?;
    let t = read_complex(truth)?;
    let report = assess(&est, &t)?;
    let out = EvaluateOutput {
        recon: recon.to_path_buf(),
        truth: truth.to_path_buf(),
        report,
    };
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        let json = metrics_json(&out)?;
        write_text(&dir.join(METRICS_FILE), &json)?;
    }
    Ok(out)
}

/// JSON with infinite PSNR written as the string `"inf"`.
fn metrics_json(out: &EvaluateOutput) -> Result<String> {
    let num = |v: f64| match serde_json::Number::from_f64(v) {
        Some(n) => serde_json::Value::Number(n),
        None => serde_json::Value::String(crate::metrics::format_db(v)),
    };
    let r = &out.report;
    let v = serde_json::json!({
        "recon": out.recon,
        "truth": out.truth,
        "ssim_phase": num(r.ssim_phase),
        "psnr_phase": num(r.psnr_phase),
        "ssim_amplitude": num(r.ssim_amplitude),
        "psnr_amplitude": num(r.psnr_amplitude),
    });
    serde_json::to_string_pretty(&v).map_err(|e| Error::Format(e.to_string()))
}

/// Short label for log lines.
pub fn describe(method: Method, result: &ReconstructionResult) -> String {
    format!(
        "{method}: {} iterations, stop {:?}, final residual {:.4e}, deep calls {}",
        result.trace.len(),
        result.stop,
        result.trace.last().map_or(f64::NAN, |r| r.residual),
        result.deep_calls
    )
}
