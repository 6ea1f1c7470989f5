//! Speckle field statistics and injection into an amplitude image.
//!
//! cargo run --release --example speckle

use std::f64::consts::PI;

use sarfx::raster::AmplitudeImage;
use sarfx::speckle::{generate_speckle, inject_speckle, SpeckleMode, DEFAULT_SIGMA_S};

fn main() -> sarfx::Result<()> {
    let field = generate_speckle(1000, 1000, SpeckleMode::Full, DEFAULT_SIGMA_S, 42)?;
    let amps = field.amplitudes();
    let mean = amps.mean().unwrap();
    let var = amps.mapv(|a| (a - mean).powi(2)).mean().unwrap();
    println!(
        "mean amplitude {mean:.4} (expected {:.4})",
        DEFAULT_SIGMA_S * (PI / 2.0).sqrt()
    );
    println!(
        "variance       {var:.4} (expected {:.4})",
        (2.0 - PI / 2.0) * DEFAULT_SIGMA_S.powi(2)
    );

    let phase_only = generate_speckle(4, 4, SpeckleMode::PhaseOnly, DEFAULT_SIGMA_S, 42)?;
    let speckled = inject_speckle(&AmplitudeImage::filled(4, 4, 1000.0)?, &phase_only)?;
    println!(
        "phase-only keeps amplitude: {:?}",
        speckled.amplitude(16).values().row(0)
    );
    Ok(())
}
