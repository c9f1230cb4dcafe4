use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holoprior::app::config::load_run_config;
use holoprior::app::{self, commands, Overrides, PlotMetric};
use holoprior::optics::SamplingStatus;
use holoprior::priors::denoiser::reference::{serve_connection, Backend};

#[derive(Parser)]
#[command(name = "holoprior", version, about = "Inline-hologram phase retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run configuration (TOML). Keys can be overridden with HOLOPRIOR_<SECTION>__<KEY>.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Denoiser command line or host:port.
    #[arg(long)]
    denoiser: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a noisy diffraction measurement from a phantom.
    Simulate(Common),
    /// Recover the object field from a measurement.
    Reconstruct(Common),
    /// Score a reconstructed field against the ground truth.
    Evaluate {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare methods over a suite of cases.
    Benchmark {
        /// Suite file (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        denoiser: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render a trace CSV as a line plot.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "residual")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a reference denoiser on stdin/stdout.
    #[command(hide = true)]
    ServeReference {
        #[arg(long, default_value = "identity")]
        backend: String,
    },
}

fn load(common: &Common) -> holoprior::Result<app::RunConfig> {
    let mut cfg = load_run_config(&common.config)?;
    Overrides {
        seed: common.seed,
        denoiser: common.denoiser.clone(),
        out_dir: common.out.clone(),
    }
    .apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> holoprior::Result<bool> {
    match cli.command {
        Cmd::Simulate(c) => {
            let out = commands::cmd_simulate(&load(&c)?)?;
            if let SamplingStatus::Capped { fraction_evanescent } = out.sampling {
                eprintln!(
                    "warning: {:.1}% of sampled frequencies are evanescent and were zeroed",
                    100.0 * fraction_evanescent
                );
            }
            println!("wrote {}", out.measurement.display());
            println!("wrote {}", out.truth.display());
            println!("wrote {}", out.sidecar.display());
        }
        Cmd::Reconstruct(c) => {
            let cfg = load(&c)?;
            let out = commands::cmd_reconstruct(&cfg)?;
            println!("{}", commands::describe(cfg.method, &out.result));
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Cmd::Evaluate { recon, truth, out } => {
            let ev = commands::cmd_evaluate(&recon, &truth, out.as_deref())?;
            println!("{}", ev.summary());
        }
        Cmd::Benchmark { config, seed, denoiser, out, jobs } => {
            let mut suite = app::load_suite(&config)?;
            if let Some(s) = seed {
                suite.seed = s;
            }
            if let Some(d) = denoiser {
                suite.denoiser.endpoint = Some(d);
            }
            if let Some(j) = jobs {
                suite.jobs = j;
            }
            let out_dir = out.or_else(|| suite.out_dir.clone());
            let report = app::cmd_benchmark(&suite, out_dir.as_deref())?;
            print!("{}", report.to_table());
            return Ok(report.is_success());
        }
        Cmd::Plot { trace, metric, out } => {
            let metric: PlotMetric = metric.parse()?;
            app::cmd_plot(&trace, metric, &out)?;
            println!("wrote {}", out.display());
        }
        Cmd::ServeReference { backend } => {
            let backend: Backend = backend.parse().map_err(holoprior::Error::Config)?;
            let handler = backend.handler();
            serve_connection(std::io::stdin().lock(), std::io::stdout().lock(), handler.as_ref())
                .map_err(|e| holoprior::Error::InvalidInput(e.to_string()))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
