//! Minimal convergence plots from a trace CSV: one polyline per prior
//! phase, no text. Use any plotting tool on the CSV for publication plots.

use std::path::Path;
use std::str::FromStr;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::solvers::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotMetric {
    /// log10 of the residual.
    Residual,
    Ssim,
    Psnr,
}

impl FromStr for PlotMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(PlotMetric::Residual),
            "ssim" => Ok(PlotMetric::Ssim),
            "psnr" => Ok(PlotMetric::Psnr),
            _ => Err(Error::Config(format!(
                "unknown plot metric `{s}` (expected residual, ssim or psnr)"
            ))),
        }
    }
}

pub const PLOT_WIDTH: u32 = 640;
pub const PLOT_HEIGHT: u32 = 400;
const MARGIN: u32 = 40;

const PHASE_COLOURS: [Rgb<u8>; 3] = [Rgb([31, 119, 180]), Rgb([214, 39, 40]), Rgb([44, 160, 44])];

fn series(trace: &ConvergenceTrace, metric: PlotMetric) -> Vec<(f64, f64, usize)> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            let y = match metric {
                PlotMetric::Residual => (r.residual > 0.0).then(|| r.residual.log10()),
                PlotMetric::Ssim => r.ssim,
                PlotMetric::Psnr => r.psnr.filter(|v| v.is_finite()),
            }?;
            Some((r.iter as f64, y, r.phase))
        })
        .collect()
}

fn line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: Rgb<u8>) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, c);
        }
    }
}

/// Renders `metric` against iteration number.
pub fn render(trace: &ConvergenceTrace, metric: PlotMetric) -> Result<RgbImage> {
    let pts = series(trace, metric);
    if pts.is_empty() {
        return Err(Error::InvalidInput(format!("trace has no {metric:?} values to plot")));
    }
    let (w, h) = (PLOT_WIDTH, PLOT_HEIGHT);
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let (x_min, x_max) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y_min, mut y_max) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let x_span = (x_max - x_min).max(1.0);
    let (l, r, t, b) = (MARGIN as f64, (w - MARGIN / 2) as f64, (MARGIN / 2) as f64, (h - MARGIN) as f64);
    let map = |x: f64, y: f64| {
        (
            l + (x - x_min) / x_span * (r - l),
            b - (y - y_min) / (y_max - y_min) * (b - t),
        )
    };

    let grid = Rgb([225, 225, 225]);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        line(&mut img, (l, t + f * (b - t)), (r, t + f * (b - t)), grid);
        line(&mut img, (l + f * (r - l), t), (l + f * (r - l), b), grid);
    }
    let axis = Rgb([0, 0, 0]);
    line(&mut img, (l, b), (r, b), axis);
    line(&mut img, (l, t), (l, b), axis);

    for pair in pts.windows(2) {
        let c = PHASE_COLOURS[pair[1].2 % PHASE_COLOURS.len()];
        line(&mut img, map(pair[0].0, pair[0].1), map(pair[1].0, pair[1].1), c);
    }
    if pts.len() == 1 {
        let (x, y) = map(pts[0].0, pts[0].1);
        line(&mut img, (x - 2.0, y), (x + 2.0, y), PHASE_COLOURS[0]);
    }
    Ok(img)
}

pub fn cmd_plot(trace_csv: &Path, metric: PlotMetric, out_png: &Path) -> Result<()> {
    let text = std::fs::read_to_string(trace_csv).map_err(|e| Error::io(trace_csv, e))?;
    let trace = ConvergenceTrace::from_csv(&text)?;
    let img = render(&trace, metric)?;
    if let Some(parent) = out_png.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    img.save(out_png).map_err(|e| Error::Image {
        path: out_png.to_path_buf(),
        message: e.to_string(),
    })
}
