//! Noisy single-shot hologram from a phantom, written as IFLD/CFLD plus a
//! 16-bit preview.
//!
//! cargo run --release --example simulate_measurement -- [out_dir]

use std::path::PathBuf;

use holoprior::fieldio::{write_complex, write_real};
use holoprior::optics::{build_otf, OpticalConfig};
use holoprior::raster::{to_display_range, write_gray16};
use holoprior::sim::{cell_like_phantom, make_phantom, simulate_diffraction, NoiseModel, PhantomMapping};

fn main() -> holoprior::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "sim_out".into()).into();
    std::fs::create_dir_all(&out).map_err(|e| holoprior::Error::InvalidInput(e.to_string()))?;

    let gray = cell_like_phantom(256, 256, 1);
    let truth = make_phantom(&gray, PhantomMapping::PurePhase)?;
    let otf = build_otf(&OpticalConfig::new(670e-9, 1e-3, 1.12e-6, 256, 256)?)?;

    for peak in [1e2, 1e4] {
        let i = simulate_diffraction(&truth, &otf, &NoiseModel::poisson(peak, 1))?;
        let name = format!("measurement_{peak:.0}");
        write_real(out.join(format!("{name}.ifld")), i.image())?;
        write_gray16(out.join(format!("{name}.png")), &to_display_range(i.image()))?;
        println!("peak {peak:>6}: mean intensity {:.4}", i.image().mean());
    }
    write_complex(out.join("truth.cfld"), &truth)?;
    println!("wrote {}", out.display());
    Ok(())
}
