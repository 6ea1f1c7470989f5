//! Azimuthal spectrum profile of a band-limited acquisition.
//!
//! cargo run --release --example spectrum

use sarfx::attack::simulate_pristine;
use sarfx::raster::AmplitudeImage;
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::spectral::{azimuthal_profile, forward_dft_complex};
use sarfx::sysid::{raised_cosine_transfer_function, RaisedCosineAxis, RaisedCosineFitParams};

fn main() -> sarfx::Result<()> {
    let n = 256;
    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * 128.0,
    };
    let h = raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, n, n)?;
    let slc = simulate_pristine(&AmplitudeImage::filled(n, n, 300.0)?, &h, DEFAULT_SIGMA_S, 1)?;
    let profile = azimuthal_profile(&forward_dft_complex(&slc));
    let peak = profile.values.iter().copied().fold(0.0, f64::max);
    for (k, v) in profile.values.iter().enumerate().step_by(8) {
        let db = 10.0 * (v / peak).log10();
        let bar = "#".repeat((db + 40.0).max(0.0).round() as usize);
        println!("{k:>4} {db:>7.1} dB {bar}");
    }
    Ok(())
}
