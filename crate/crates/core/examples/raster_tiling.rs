//! Round-trip a raster through the binary format and cut it into tiles.
//!
//! cargo run --example raster_tiling

use sarfx::raster::{read_amplitude, tile, write_raster, AmplitudeImage, Raster};

fn main() -> sarfx::Result<()> {
    let image = AmplitudeImage::from_values(ndarray::Array2::from_shape_fn((300, 200), |(r, c)| {
        (r * 200 + c) as f64
    }))?;
    let path = std::env::temp_dir().join("sarfx-raster-tiling.sarf");
    write_raster(&Raster::Amplitude(image.clone()), &path)?;
    let back = read_amplitude(&path)?;
    println!("round trip exact: {}", back == image);

    for t in tile(&back, 128, 64)? {
        println!("tile at ({:>3}, {:>3}) {:?}", t.row_offset, t.col_offset, t.image.dim());
    }
    std::fs::remove_file(path)?;
    Ok(())
}
