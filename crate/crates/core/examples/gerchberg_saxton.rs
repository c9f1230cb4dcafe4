//! Gerchberg-Saxton (error reduction with the unit-amplitude constraint)
//! against plain backprojection.
//!
//! cargo run --release --example gerchberg_saxton

use holoprior::metrics::assess;
use holoprior::optics::{build_otf, OpticalConfig};
use holoprior::sim::{cell_like_phantom, make_phantom, simulate_diffraction, NoiseModel, PhantomMapping};
use holoprior::solvers::{backpropagate_once, gerchberg_saxton};

fn main() -> holoprior::Result<()> {
    let n = 128;
    let cfg = OpticalConfig::new(670e-9, 1e-3, 1.12e-6, n, n)?;
    let truth = make_phantom(&cell_like_phantom(n, n, 2), PhantomMapping::PurePhase)?;
    let meas = simulate_diffraction(&truth, &build_otf(&cfg)?, &NoiseModel::none())?;

    let bp = backpropagate_once(&meas, &cfg)?;
    println!("backprop  {:?}", assess(&bp, &truth)?);
    let gs = gerchberg_saxton(&meas, &cfg, 100)?;
    let r = gs.trace.residuals();
    println!("gs        {:?}", assess(&gs.field, &truth)?);
    println!("residual  {:.4e} -> {:.4e} over {} iterations", r[0], r[r.len() - 1], r.len());
    Ok(())
}
