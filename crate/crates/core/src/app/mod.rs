//! The `holoprior` command-line workflows: simulate, reconstruct, evaluate,
//! benchmark and plot. Each command takes an already-loaded config so it
//! can be driven from tests and examples as well as from the binary.

pub mod benchmark;
pub mod commands;
pub mod config;
pub mod plot;

pub use benchmark::{cmd_benchmark, load_suite, BenchmarkReport, BenchmarkRow, BenchmarkSuite};
pub use commands::{
    cmd_evaluate, cmd_reconstruct, cmd_simulate, connect_denoiser, EvaluateOutput, ReconstructOutput,
    SimulateOutput,
};
pub use config::{load_run_config, Method, RunConfig};
pub use plot::{cmd_plot, PlotMetric};

pub const MEASUREMENT_FILE: &str = "measurement.ifld";
pub const MEASUREMENT_PNG: &str = "measurement.png";
pub const TRUTH_FILE: &str = "truth.cfld";
pub const SIMULATE_SIDECAR: &str = "simulate.toml";
pub const RECON_FILE: &str = "recon.cfld";
pub const RECON_AMPLITUDE_PNG: &str = "recon_amplitude.png";
pub const RECON_PHASE_PNG: &str = "recon_phase.png";
pub const TRACE_FILE: &str = "trace.csv";
pub const RECONSTRUCT_SIDECAR: &str = "reconstruct.toml";
pub const METRICS_FILE: &str = "metrics.json";
pub const BENCHMARK_CSV: &str = "benchmark.csv";
pub const BENCHMARK_TABLE: &str = "benchmark.txt";

/// Command-line flags that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub denoiser: Option<String>,
    pub out_dir: Option<std::path::PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.denoiser {
            cfg.denoiser.endpoint = Some(d.clone());
        }
        if let Some(o) = &self.out_dir {
            cfg.paths.out_dir = Some(o.clone());
        }
    }
}
