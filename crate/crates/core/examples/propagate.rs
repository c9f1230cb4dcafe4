//! Angular-spectrum propagation of a pure-phase object to the sensor and
//! back, with the sampling check.
//!
//! cargo run --release --example propagate

use holoprior::optics::{build_otf, validate_sampling, Direction, OpticalConfig};
use holoprior::sim::{cell_like_phantom, make_phantom, PhantomMapping};

fn main() -> holoprior::Result<()> {
    let cfg = OpticalConfig::new(670e-9, 1e-3, 1.12e-6, 256, 256)?;
    println!("sampling: {:?}", validate_sampling(&cfg));

    let object = make_phantom(&cell_like_phantom(256, 256, 1), PhantomMapping::PurePhase)?;
    let otf = build_otf(&cfg)?;
    let sensor = otf.propagate(&object, Direction::Forward)?;
    let back = otf.propagate(&sensor, Direction::Backward)?;

    let (lo, hi) = sensor.amplitude().min_max();
    println!("sensor amplitude range {lo:.3} .. {hi:.3}");
    println!("energy object {:.6} sensor {:.6}", object.energy(), sensor.energy());
    let err: f64 = back
        .as_slice()
        .iter()
        .zip(object.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("max |back - object| = {err:.2e}");

    // too fine a pitch puts part of the spectrum past the evanescent cutoff
    let fine = OpticalConfig::new(670e-9, 1e-3, 0.2e-6, 256, 256)?;
    println!("0.2 µm pitch: {:?}", validate_sampling(&fine));
    Ok(())
}
