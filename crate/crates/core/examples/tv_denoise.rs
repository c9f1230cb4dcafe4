//! Chambolle TV denoising of a noisy piecewise-constant image at several
//! weights.
//!
//! cargo run --release --example tv_denoise

use holoprior::metrics::psnr;
use holoprior::priors::{total_variation, tv_denoise};
use holoprior::sim::sample_poisson;
use holoprior::RealImage;

fn main() -> holoprior::Result<()> {
    let clean = RealImage::from_fn(64, 64, |x, y| {
        let inside = (x as f64 - 32.0).hypot(y as f64 - 32.0) < 18.0;
        if inside { 60.0 } else { 20.0 }
    });
    let noisy = RealImage::from_vec(64, 64, sample_poisson(clean.as_slice(), 3))?;
    println!("input  TV {:>9.1}  PSNR {:.2} dB", total_variation(&noisy), psnr(&noisy, &clean, 60.0)?);
    for weight in [1.0, 4.0, 10.0, 30.0] {
        let out = tv_denoise(&noisy, weight, 200, 1e-4);
        println!(
            "w={weight:<4} TV {:>9.1}  PSNR {:.2} dB  mean shift {:.1e}",
            total_variation(&out),
            psnr(&out, &clean, 60.0)?,
            out.mean() - noisy.mean()
        );
    }
    Ok(())
}
