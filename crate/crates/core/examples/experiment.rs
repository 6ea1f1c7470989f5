//! A small batch experiment driven by a JSON config.
//!
//! cargo run --release --example experiment

use sarfx::attack::simulate_pristine;
use sarfx::experiment::{run_experiment, ExperimentConfig};
use sarfx::raster::{write_raster, Raster};
use sarfx::scene::{synthetic_scene, SceneParams};
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::sysid::{raised_cosine_transfer_function, RaisedCosineAxis, RaisedCosineFitParams};

fn main() -> sarfx::Result<()> {
    let dir = std::env::temp_dir().join("sarfx-experiment-example");
    std::fs::create_dir_all(&dir)?;
    let n = 512;
    let response = |size: usize| {
        let axis = RaisedCosineAxis {
            a: 0.6,
            b: 0.4,
            cutoff: 0.4 * (size / 2) as f64,
        };
        raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, size, size)
    };
    let h = response(n)?;
    let scene = synthetic_scene(n, n, &SceneParams::default(), 1)?;
    let image = simulate_pristine(&scene.reflectivity, &h, DEFAULT_SIGMA_S, 2)?.amplitude(16);
    write_raster(&Raster::Amplitude(image), dir.join("scene.sarf"))?;
    // the attack runs per tile, so its response is tile-sized
    response(256)?.write(dir.join("h.sarf"))?;

    let config = serde_json::json!({
        "schema_version": 1,
        "manifest": [{"id": "scene", "path": "scene.sarf"}],
        "tile": {"size": 256, "overlap": 128},
        "splice": {"region": [64, 64]},
        "attack": {"filter": {"kind": "known", "path": "h.sarf"}},
        "metrics": {"enl_region": "untampered"},
        "master_seed": 2024,
        "out_dir": "out"
    });
    let path = dir.join("experiment.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config)?)?;

    let config = ExperimentConfig::load(&path)?;
    let report = run_experiment(&config, None)?;
    println!("{} rows, {} failed", report.rows.len(), report.failed());
    for s in &report.summary {
        println!(
            "{:<15} ssim {:.4}  ms-ssim {:.4}  |d-enl| {:.2}%",
            s.edit,
            s.ssim.unwrap_or(f64::NAN),
            s.msssim.unwrap_or(f64::NAN),
            s.delta_enl_pct.unwrap_or(f64::NAN)
        );
    }
    println!("reports in {}", config.out_dir.display());
    Ok(())
}
