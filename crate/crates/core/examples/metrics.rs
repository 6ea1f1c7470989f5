//! Quality and detection metrics on a toy pair of images.
//!
//! cargo run --release --example metrics

use ndarray::Array2;
use sarfx::metrics::{auc_roc, evaluate, FingerprintMap, DEFAULT_DYNAMIC_RANGE};
use sarfx::raster::{AmplitudeImage, TamperMask};
use sarfx::speckle::{generate_speckle, SpeckleMode};

fn main() -> sarfx::Result<()> {
    let n = 256;
    let field = generate_speckle(n, n, SpeckleMode::Full, 1.0, 5)?;
    let pristine = AmplitudeImage::from_values(field.amplitudes() * 2000.0)?;
    let blurred = AmplitudeImage::from_values(Array2::from_shape_fn((n, n), |(r, c)| {
        let v = pristine.values();
        (v[(r, c)] + v[(r, (c + 1) % n)]) / 2.0
    }))?;
    let mask = TamperMask::new(Array2::from_shape_fn((n, n), |(r, c)| u8::from(r < 64 && c < 64)))?;
    let fingerprint = FingerprintMap::new(Array2::from_shape_fn((n, n), |(r, c)| {
        f64::from(mask.values()[(r, c)]) + 0.8 * field.phases()[(r, c)].sin()
    }))?;

    let report = evaluate(
        &blurred,
        &pristine,
        None,
        Some((&fingerprint, &mask)),
        DEFAULT_DYNAMIC_RANGE,
    )?;
    println!("{}", report.to_json()?);
    let perfect = FingerprintMap::new(mask.values().mapv(f64::from))?;
    println!("AUC of the mask itself: {}", auc_roc(&perfect, &mask)?.max_polarity);
    Ok(())
}
