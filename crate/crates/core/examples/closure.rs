//! Synthetic closure: simulate pristine scenes through a known system,
//! estimate the system from a sibling acquisition, attack, and score.
//!
//! cargo run --release --example closure -- [tiles] [size]

use std::time::Instant;

use sarfx::attack::{run_attack_with, simulate_pristine, AttackConfig, FilterSource};
use sarfx::metrics::{delta_enl, ssim, DEFAULT_DYNAMIC_RANGE};
use sarfx::rng::derive_seed;
use sarfx::scene::{synthetic_scene, SceneParams};
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::sysid::{
    estimate_transfer_function, raised_cosine_transfer_function, RaisedCosineAxis, RaisedCosineFitParams, Sources,
    Strategy,
};

fn ncc(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    let ma = a.mean().unwrap();
    let mb = b.mean().unwrap();
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da * db).sqrt()
}

fn main() -> sarfx::Result<()> {
    let mut args = std::env::args().skip(1);
    let tiles: usize = args.next().map_or(10, |s| s.parse().expect("tile count"));
    let size: usize = args.next().map_or(512, |s| s.parse().expect("tile size"));
    let start = Instant::now();

    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * (size / 2) as f64,
    };
    let h_true = raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, size, size)?;
    let params = SceneParams::default();

    for t in 0..tiles {
        let id = format!("tile-{t}");
        let scene = synthetic_scene(size, size, &params, derive_seed(7, &id, "scene"))?;
        let pristine = simulate_pristine(
            &scene.reflectivity,
            &h_true,
            DEFAULT_SIGMA_S,
            derive_seed(7, &id, "speckle"),
        )?
        .amplitude(16);
        let sibling_scene = synthetic_scene(size, size, &params, derive_seed(7, &id, "sibling-scene"))?;
        let sibling = simulate_pristine(
            &sibling_scene.reflectivity,
            &h_true,
            DEFAULT_SIGMA_S,
            derive_seed(7, &id, "sibling-speckle"),
        )?;
        let h_est = estimate_transfer_function(&Sources::Complex(vec![sibling]), Strategy::Direct, None)?;
        let config = AttackConfig::new(FilterSource::Known(h_est.clone()), derive_seed(7, &id, "attack"));
        let attacked = run_attack_with(&pristine, &config, h_est.clone())?.attacked;
        println!(
            "{id}: ssim {:.4}  |d-enl| {:.3}% (homogeneous {:.2}%)  ncc {:.4}",
            ssim(&attacked, &pristine, DEFAULT_DYNAMIC_RANGE)?,
            delta_enl(&attacked, &pristine, None)?,
            delta_enl(&attacked, &pristine, Some(&scene.homogeneous))?,
            ncc(h_est.values(), h_true.values()),
        );
    }
    println!("{tiles} tiles of {size}x{size} in {:.2?}", start.elapsed());
    Ok(())
}
