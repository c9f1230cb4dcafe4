//! Error reduction with TV on amplitude and phase, tracking phase SSIM per
//! iteration and writing the trace CSV.
//!
//! cargo run --release --example er_tv -- [trace.csv]

use holoprior::metrics::assess;
use holoprior::optics::{build_otf, OpticalConfig};
use holoprior::sim::{cell_like_phantom, make_phantom, simulate_diffraction, NoiseModel, PhantomMapping};
use holoprior::solvers::{reconstruct_with, PriorPhase};
use holoprior::{Channel, PriorChain, PriorStage, SolveSchedule};

fn main() -> holoprior::Result<()> {
    let trace_path = std::env::args().nth(1).unwrap_or_else(|| "er_tv_trace.csv".into());
    let n = 128;
    let cfg = OpticalConfig::new(670e-9, 1e-3, 1.12e-6, n, n)?;
    let otf = build_otf(&cfg)?;
    let truth = make_phantom(&cell_like_phantom(n, n, 1), PhantomMapping::PurePhase)?;
    let meas = simulate_diffraction(&truth, &otf, &NoiseModel::poisson(1e4, 1))?;

    let chain = PriorChain::new(vec![
        PriorStage::tv(0.05, Channel::Amplitude),
        PriorStage::tv(0.05, Channel::Phase),
    ]);
    let schedule = SolveSchedule::with_phases(vec![PriorPhase::from_start(chain)]).max_outer_iter(100);
    let r = reconstruct_with(&meas, &cfg, &otf, &schedule, None, Some(&truth))?;

    for rec in r.trace.records.iter().step_by(10) {
        println!("iter {:>3}  residual {:.4e}  phase ssim {:.4}", rec.iter, rec.residual, rec.ssim.unwrap());
    }
    println!("stop {:?}: {:?}", r.stop, assess(&r.field, &truth)?);
    r.trace.write_csv(&trace_path)?;
    println!("wrote {trace_path}");
    Ok(())
}
