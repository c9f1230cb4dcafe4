//! SSIM and PSNR on images and on complex fields with the global phase
//! removed.
//!
//! cargo run --release --example metrics

use num_complex::Complex64;

use holoprior::metrics::{align_global_phase, assess, format_db, psnr, ssim};
use holoprior::sim::{cell_like_phantom, make_phantom, PhantomMapping};

fn main() -> holoprior::Result<()> {
    let x = cell_like_phantom(64, 64, 1);
    let off_by_one = x.map(|v| v + 1.0);
    println!("ssim(x, x)        = {}", ssim(&x, &x, 255.0)?);
    println!("psnr(x, x)        = {} dB", format_db(psnr(&x, &x, 255.0)?));
    println!("psnr(x + 1, x)    = {} dB", format_db(psnr(&off_by_one, &x, 255.0)?));
    println!("psnr(x + 0.5, x)  = {} dB", format_db(psnr(&x.map(|v| v + 0.5), &x, 255.0)?));

    let truth = make_phantom(&x, PhantomMapping::PurePhase)?;
    let rotated = truth.map(|v| v * Complex64::from_polar(1.0, 1.3));
    let aligned = align_global_phase(&rotated, &truth)?;
    println!("global phase 1.3 rad: {:?}", assess(&rotated, &truth)?);
    println!("max residual after alignment {:.2e}", aligned
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max));
    Ok(())
}
