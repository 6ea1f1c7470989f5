//! Generate spliced forgeries for every local edit, plus the global edits.
//!
//! cargo run --release --example forge

use sarfx::forgery::{global_edit, local_edits, splice_into, GlobalEditOp};
use sarfx::raster::AmplitudeImage;
use sarfx::scene::{synthetic_scene, SceneParams};

fn main() -> sarfx::Result<()> {
    let params = SceneParams::default();
    let tiles = (0..2)
        .map(|s| synthetic_scene(256, 256, &params, s).map(|scene| scene.reflectivity))
        .collect::<sarfx::Result<Vec<AmplitudeImage>>>()?;
    for (i, edit) in local_edits().iter().enumerate() {
        let forged = splice_into(&tiles, 1, 0, (64, 64), None, edit, i as u64)?;
        let p = &forged.provenance;
        println!(
            "{:<15} parameter {:>7.3}  target {:?}  {} tampered pixels",
            edit.name(),
            p.edit.parameter.unwrap_or(f64::NAN),
            p.target_origin,
            forged.mask.count()
        );
    }
    for (name, op) in GlobalEditOp::catalog() {
        let out = global_edit(&tiles[0], &op, 1)?;
        let change = (out.values() - tiles[0].values()).mapv(f64::abs).mean().unwrap();
        println!("{name:<20} mean |change| {change:.2}");
    }
    Ok(())
}
