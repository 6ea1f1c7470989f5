//! Estimate the system response with every strategy and compare it to the truth.
//!
//! cargo run --release --example estimate_filter

use sarfx::attack::simulate_pristine;
use sarfx::raster::AmplitudeImage;
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::sysid::{
    estimate_transfer_function, raised_cosine_transfer_function, FitParams, RaisedCosineAxis, RaisedCosineFitParams,
    Sources, Strategy,
};

fn main() -> sarfx::Result<()> {
    let n = 256;
    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * 128.0,
    };
    let h_true = raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, n, n)?;
    let refl = AmplitudeImage::filled(n, n, 300.0)?;
    let sources = Sources::Complex(
        (0..3)
            .map(|s| simulate_pristine(&refl, &h_true, DEFAULT_SIGMA_S, s))
            .collect::<sarfx::Result<_>>()?,
    );
    for strategy in [Strategy::Direct, Strategy::Gaussian, Strategy::RaisedCosine] {
        let h = estimate_transfer_function(&sources, strategy, None)?;
        let err = (h.values() - h_true.values()).mapv(f64::abs).mean().unwrap();
        println!("{:<14} mean |H - H_true| {err:.4}", strategy.to_string());
        for fit in h.fits() {
            match fit {
                FitParams::RaisedCosine(p) => println!(
                    "    cutoffs {:.2} / {:.2} (true {:.2})",
                    p.x.cutoff, p.y.cutoff, axis.cutoff
                ),
                FitParams::Gaussian(p) => println!("    std {:.2} / {:.2}", p.x.std, p.y.std),
            }
        }
    }
    Ok(())
}
