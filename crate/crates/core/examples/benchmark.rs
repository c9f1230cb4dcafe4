//! Programmatic method comparison: one simulated case, several methods,
//! aligned table and CSV.
//!
//! cargo run --release --example benchmark

use holoprior::app::benchmark::{cmd_benchmark, BenchmarkCase, BenchmarkSuite};
use holoprior::app::config::{Method, NoiseSection, PhantomSection};
use holoprior::sim::NoiseKind;

fn main() -> holoprior::Result<()> {
    let suite: BenchmarkSuite = toml::from_str(
        r#"
        seed = 1
        methods = ["backprop", "gs", "er", "er_tv", "hio_gs", "hio_er_tv"]
        jobs = 2
        [schedule]
        max_outer_iter = 100
        "#,
    )
    .map_err(|e| holoprior::Error::Config(e.to_string()))?;
    let mut suite = BenchmarkSuite {
        cases: vec![BenchmarkCase {
            name: "cell128".into(),
            optical: Default::default(),
            phantom: PhantomSection { width_px: 128, height_px: 128, ..Default::default() },
            noise: NoiseSection { kind: NoiseKind::Poisson, peak_photons: 1e4 },
        }],
        ..suite
    };
    assert!(suite.methods.contains(&Method::ErTv));
    suite.jobs = suite.jobs.min(std::thread::available_parallelism().map_or(1, |n| n.get()));

    let report = cmd_benchmark(&suite, None)?;
    print!("{}", report.to_table());
    println!();
    print!("{}", report.to_csv());
    Ok(())
}
