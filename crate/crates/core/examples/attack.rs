//! Re-acquire a spliced image and compare it to the input.
//!
//! cargo run --release --example attack

use sarfx::attack::{run_attack, simulate_pristine, AttackConfig, FilterSource};
use sarfx::forgery::{splice_into, EditOp};
use sarfx::metrics::{ssim, DEFAULT_DYNAMIC_RANGE};
use sarfx::raster::AmplitudeImage;
use sarfx::scene::{synthetic_scene, SceneParams};
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::sysid::{raised_cosine_transfer_function, RaisedCosineAxis, RaisedCosineFitParams};

fn main() -> sarfx::Result<()> {
    let n = 256;
    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * 128.0,
    };
    let h = raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, n, n)?;
    let tiles = (0..2)
        .map(|s| {
            let scene = synthetic_scene(n, n, &SceneParams::default(), s)?;
            Ok(simulate_pristine(&scene.reflectivity, &h, DEFAULT_SIGMA_S, s)?.amplitude(16))
        })
        .collect::<sarfx::Result<Vec<AmplitudeImage>>>()?;
    let forged = splice_into(&tiles, 1, 0, (64, 64), None, &EditOp::from_name("rotate-far")?, 3)?;

    for (label, filter) in [
        ("known H", FilterSource::Known(h.clone())),
        ("self estimate", FilterSource::SelfAmplitude { smoothing: None }),
    ] {
        let result = run_attack(&forged.spliced, &AttackConfig::new(filter, 9))?;
        println!(
            "{label:<14} SSIM to input {:.4}  filter {}",
            ssim(&result.attacked, &forged.spliced, DEFAULT_DYNAMIC_RANGE)?,
            result.config.filter
        );
    }
    Ok(())
}
