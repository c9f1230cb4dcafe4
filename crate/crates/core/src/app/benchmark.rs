//! Method comparison over one or more simulated cases. Every method of a
//! case sees the same seeded measurement.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::commands::{connect_denoiser, run_method, simulate_in_memory};
use super::config::{
    parse_with_overrides, DeepSection, DenoiserSection, Method, NoiseSection, OpticalSection,
    PhantomSection, RunConfig, ScheduleSection, TvSection,
};
use super::{BENCHMARK_CSV, BENCHMARK_TABLE};
use crate::error::{Error, Result};
use crate::metrics::{assess, format_db};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub name: String,
    #[serde(default)]
    pub optical: OpticalSection,
    #[serde(default)]
    pub phantom: PhantomSection,
    #[serde(default)]
    pub noise: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSuite {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub methods: Vec<Method>,
    /// Parallel worker slots; each case/method pair is sequential inside.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub tv: TvSection,
    #[serde(default)]
    pub deep: DeepSection,
    #[serde(default)]
    pub denoiser: DenoiserSection,
    #[serde(default)]
    pub cases: Vec<BenchmarkCase>,
}

fn default_jobs() -> usize {
    1
}

impl BenchmarkSuite {
    fn run_config(&self, case: &BenchmarkCase, method: Method) -> RunConfig {
        RunConfig {
            seed: self.seed,
            method,
            optical: case.optical,
            phantom: case.phantom.clone(),
            noise: case.noise,
            schedule: self.schedule,
            tv: self.tv,
            deep: self.deep,
            denoiser: self.denoiser.clone(),
            paths: Default::default(),
        }
    }
}

pub fn load_suite(path: &Path) -> Result<BenchmarkSuite> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut suite: BenchmarkSuite =
        parse_with_overrides(&text, std::env::vars(), &path.display().to_string())?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for case in &mut suite.cases {
        if let Some(p) = &mut case.phantom.path {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    if let Some(o) = &mut suite.out_dir {
        if o.is_relative() {
            *o = base.join(&*o);
        }
    }
    Ok(suite)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub case: String,
    pub method: Method,
    pub ssim_phase: Option<f64>,
    pub psnr_phase: Option<f64>,
    pub ssim_amplitude: Option<f64>,
    pub psnr_amplitude: Option<f64>,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub seconds: f64,
    pub deep_calls: u64,
    pub error: Option<String>,
}

impl BenchmarkRow {
    fn failed(case: &str, method: Method, err: String) -> Self {
        Self {
            case: case.to_string(),
            method,
            ssim_phase: None,
            psnr_phase: None,
            ssim_amplitude: None,
            psnr_amplitude: None,
            iterations: 0,
            final_residual: None,
            seconds: 0.0,
            deep_calls: 0,
            error: Some(err),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "-".into())
}

impl BenchmarkReport {
    pub fn is_success(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    pub fn row(&self, case: &str, method: Method) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.case == case && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "case,method,ssim_phase,psnr_phase,ssim_amplitude,psnr_amplitude,iterations,final_residual,seconds,deep_calls,error\n",
        );
        let f = |v: Option<f64>| v.map(|x| if x.is_finite() { format!("{x:.6}") } else { format_db(x) }).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.3},{},{}",
                r.case,
                r.method,
                f(r.ssim_phase),
                f(r.psnr_phase),
                f(r.ssim_amplitude),
                f(r.psnr_amplitude),
                r.iterations,
                r.final_residual.map(|v| format!("{v:.6e}")).unwrap_or_default(),
                r.seconds,
                r.deep_calls,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = [
            "case", "method", "ssim_phase", "psnr_phase", "ssim_amp", "psnr_amp", "iters", "seconds",
            "deep_calls", "status",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            cells.push(vec![
                r.case.clone(),
                r.method.to_string(),
                opt(r.ssim_phase, |v| format!("{v:.4}")),
                opt(r.psnr_phase, format_db),
                opt(r.ssim_amplitude, |v| format!("{v:.4}")),
                opt(r.psnr_amplitude, format_db),
                r.iterations.to_string(),
                format!("{:.2}", r.seconds),
                r.deep_calls.to_string(),
                r.error.as_ref().map_or("ok".into(), |e| format!("error: {e}")),
            ]);
        }
        let cols = header.len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [(BENCHMARK_CSV, self.to_csv()), (BENCHMARK_TABLE, self.to_table())] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn run_case(
    suite: &BenchmarkSuite,
    case: &BenchmarkCase,
    sim: &crate::Result<(crate::ComplexField, crate::IntensityImage, crate::optics::SamplingStatus)>,
    method: Method,
    trace_dir: Option<&Path>,
) -> BenchmarkRow {
    let (truth, intensity) = match sim {
        Ok((t, i, _)) => (t, i),
        Err(e) => return BenchmarkRow::failed(&case.name, method, format!("simulation failed: {e}")),
    };
    let cfg = suite.run_config(case, method);
    let started = Instant::now();
    let outcome = (|| -> Result<BenchmarkRow> {
        let mut ep = if method.needs_denoiser() {
            Some(connect_denoiser(&cfg)?)
        } else {
            None
        };
        let result = run_method(&cfg, intensity, None, ep.as_mut())?;
        let q = assess(&result.field, truth)?;
        if let Some(dir) = trace_dir {
            result.trace.write_csv(dir.join(format!("trace_{}_{}.csv", case.name, method)))?;
        }
        Ok(BenchmarkRow {
            case: case.name.clone(),
            method,
            ssim_phase: Some(q.ssim_phase),
            psnr_phase: Some(q.psnr_phase),
            ssim_amplitude: Some(q.ssim_amplitude),
            psnr_amplitude: Some(q.psnr_amplitude),
            iterations: result.trace.len(),
            final_residual: result.trace.last().map(|r| r.residual),
            seconds: started.elapsed().as_secs_f64(),
            deep_calls: result.deep_calls,
            error: None,
        })
    })();
    outcome.unwrap_or_else(|e| BenchmarkRow::failed(&case.name, method, e.to_string()))
}

/// Runs every method on every case. Failures become rows with `error`
/// set; the rest of the suite still runs. Rows come out in case-major,
/// method-minor order regardless of `jobs`.
pub fn cmd_benchmark(suite: &BenchmarkSuite, out_dir: Option<&Path>) -> Result<BenchmarkReport> {
    if suite.methods.is_empty() || suite.cases.is_empty() {
        let report = BenchmarkReport::default();
        if let Some(dir) = out_dir {
            report.write(dir)?;
        }
        return Ok(report);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(suite.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} benchmark workers: {e}", suite.jobs)))?;

    let rows = pool.install(|| {
        let sims: Vec<_> = suite
            .cases
            .par_iter()
            .map(|c| simulate_in_memory(&suite.run_config(c, Method::Backprop)))
            .collect();
        let tasks: Vec<(usize, Method)> = (0..suite.cases.len())
            .flat_map(|c| suite.methods.iter().map(move |&m| (c, m)))
            .collect();
        tasks
            .par_iter()
            .map(|&(c, m)| run_case(suite, &suite.cases[c], &sims[c], m, out_dir))
            .collect::<Vec<_>>()
    });
    let report = BenchmarkReport { rows };
    if let Some(dir) = out_dir {
        report.write(dir)?;
    }
    Ok(report)
}
