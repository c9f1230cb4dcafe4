//! Hybrid input-output with the unit-amplitude constraint and with TV,
//! next to plain error reduction.
//!
//! cargo run --release --example hio

use holoprior::metrics::assess;
use holoprior::optics::{build_otf, OpticalConfig};
use holoprior::sim::{cell_like_phantom, make_phantom, simulate_diffraction, NoiseModel, PhantomMapping};
use holoprior::solvers::{reconstruct_with, PriorPhase};
use holoprior::{Channel, PriorChain, PriorStage, SolveSchedule};

fn main() -> holoprior::Result<()> {
    let n = 128;
    let cfg = OpticalConfig::new(670e-9, 1e-3, 1.12e-6, n, n)?;
    let otf = build_otf(&cfg)?;
    let truth = make_phantom(&cell_like_phantom(n, n, 4), PhantomMapping::PurePhase)?;
    let meas = simulate_diffraction(&truth, &otf, &NoiseModel::poisson(1e4, 4))?;

    let unit = PriorChain::new(vec![PriorStage::unit_amplitude()]);
    let tv = PriorChain::new(vec![PriorStage::tv(0.05, Channel::Both)]);
    let runs = [
        ("er unit amplitude", unit.clone(), None),
        ("hio unit amplitude", unit, Some(0.9)),
        ("er tv", tv.clone(), None),
        ("hio tv", tv, Some(0.9)),
    ];
    for (name, chain, beta) in runs {
        let mut s = SolveSchedule::with_phases(vec![PriorPhase::from_start(chain)]).max_outer_iter(100);
        if let Some(b) = beta {
            s = s.hio(b);
        }
        let r = reconstruct_with(&meas, &cfg, &otf, &s, None, None)?;
        let q = assess(&r.field, &truth)?;
        println!(
            "{name:<20} iters {:>3}  residual {:.4e}  phase ssim {:.4}  psnr {:.2} dB",
            r.trace.len(),
            r.trace.last().unwrap().residual,
            q.ssim_phase,
            q.psnr_phase
        );
    }
    Ok(())
}
