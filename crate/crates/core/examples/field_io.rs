//! CFLD/IFLD round trips and PNG rasters.
//!
//! cargo run --release --example field_io

use holoprior::fieldio::{decode_complex, encode_complex, read_real, write_real};
use holoprior::metrics::phase_display;
use holoprior::raster::{read_grayscale, write_gray8};
use holoprior::sim::{cell_like_phantom, make_phantom, PhantomMapping};

fn main() -> holoprior::Result<()> {
    let dir = std::env::temp_dir().join("holoprior_field_io");
    std::fs::create_dir_all(&dir).map_err(|e| holoprior::Error::InvalidInput(e.to_string()))?;

    let gray = cell_like_phantom(32, 24, 5);
    let field = make_phantom(&gray, PhantomMapping::PurePhase)?;
    let bytes = encode_complex(&field)?;
    println!("CFLD header {:02x?}, {} bytes total", &bytes[..13], bytes.len());
    assert_eq!(decode_complex(&bytes)?, field);

    write_real(dir.join("gray.ifld"), &gray)?;
    assert_eq!(read_real(dir.join("gray.ifld"))?, gray);

    // phase rasters map [0, 2π) onto [0, 255]
    let png = dir.join("phase.png");
    write_gray8(&png, &phase_display(&field))?;
    let back = read_grayscale(&png)?;
    println!("phase raster {}x{} range {:?}", back.width(), back.height(), back.min_max());
    println!("files in {}", dir.display());
    Ok(())
}
