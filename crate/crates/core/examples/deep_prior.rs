//! Deep-denoiser priors through the wire protocol, using the in-process
//! box-blur reference server as a stand-in for a trained network. Compares
//! the deep-call counts of the one-step and two-step schedules.
//!
//! Point `--denoiser`-style descriptors at a real server instead with
//! `cargo run --release --example deep_prior -- 127.0.0.1:5000`.

use std::time::Duration;

use holoprior::app::config::{method_schedule, Method, PriorParams, ScheduleSection};
use holoprior::metrics::assess;
use holoprior::optics::{build_otf, OpticalConfig};
use holoprior::priors::denoiser::reference::{Backend, TcpServer};
use holoprior::sim::{cell_like_phantom, make_phantom, simulate_diffraction, NoiseModel, PhantomMapping};
use holoprior::solvers::reconstruct_with;
use holoprior::{DenoiserEndpoint, Transport};

fn main() -> holoprior::Result<()> {
    let local = TcpServer::spawn_backend(Backend::BoxBlur).expect("loopback server");
    let descriptor = std::env::args().nth(1).unwrap_or_else(|| local.descriptor());
    let transport: Transport = descriptor.parse()?;
    let mut ep = DenoiserEndpoint::connect(&transport, Duration::from_secs(60))?;
    println!("denoiser: {}", ep.description());

    let n = 128;
    let cfg = OpticalConfig::new(670e-9, 1e-3, 1.12e-6, n, n)?;
    let otf = build_otf(&cfg)?;
    let truth = make_phantom(&cell_like_phantom(n, n, 1), PhantomMapping::PurePhase)?;
    let meas = simulate_diffraction(&truth, &otf, &NoiseModel::poisson(1e4, 1))?;

    let priors = PriorParams::default();
    let sched = ScheduleSection { max_outer_iter: 150, ..Default::default() };
    for method in [Method::ErTv, Method::PhyZsn, Method::PhytvZsn] {
        let s = method_schedule(method, &priors, &sched).expect("iterative method");
        let r = reconstruct_with(&meas, &cfg, &otf, &s, Some(&mut ep), None)?;
        let q = assess(&r.field, &truth)?;
        println!(
            "{method:<10} iters {:>3}  deep calls {:>4}  phase ssim {:.4}",
            r.trace.len(),
            r.deep_calls,
            q.ssim_phase
        );
    }
    Ok(())
}
