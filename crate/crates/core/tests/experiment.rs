mod common;

use std::path::Path;

use common::ResidualEnergy;
use sarfx::attack::simulate_pristine;
use sarfx::experiment::{run_experiment, ExperimentConfig, ROW_HEADER, SUMMARY_HEADER};
use sarfx::forgery::local_edits;
use sarfx::raster::{write_raster, Raster};
use sarfx::scene::{synthetic_scene, SceneParams};
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::sysid::{raised_cosine_transfer_function, RaisedCosineAxis, RaisedCosineFitParams};

fn write_tiles(dir: &Path, count: usize, n: usize) -> serde_json::Value {
    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * (n / 2) as f64,
    };
    let h = raised_cosine_transfer_function(&RaisedCosineFitParams { x: axis, y: axis }, n, n).unwrap();
    h.write(dir.join("h.sarf")).unwrap();
    let entries: Vec<serde_json::Value> = (0..count)
        .map(|i| {
            let scene = synthetic_scene(n, n, &SceneParams::default(), 100 + i as u64).unwrap();
            let img = simulate_pristine(&scene.reflectivity, &h, DEFAULT_SIGMA_S, i as u64)
                .unwrap()
                .amplitude(16);
            let name = format!("tile{i}.sarf");
            write_raster(&Raster::Amplitude(img), dir.join(&name)).unwrap();
            serde_json::json!({"id": format!("t{i}"), "path": name, "product": "p"})
        })
        .collect();
    serde_json::Value::Array(entries)
}

fn config(dir: &Path, manifest: serde_json::Value, out: &str) -> ExperimentConfig {
    let json = serde_json::json!({
        "schema_version": 1,
        "manifest": manifest,
        "splice": {"region": [32, 32]},
        "attack": {"filter": {"kind": "known", "path": "h.sarf"}},
        "master_seed": 2024,
        "out_dir": out
    });
    let path = dir.join(format!("{out}.json"));
    std::fs::write(&path, json.to_string()).unwrap();
    ExperimentConfig::load(path).unwrap()
}

fn read(dir: &Path, out: &str, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(out).join(file)).unwrap()
}

#[test]
fn empty_manifest_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    write_tiles(dir.path(), 0, 16);
    let cfg = config(dir.path(), serde_json::json!([]), "out");
    let report = run_experiment(&cfg, None).unwrap();
    assert!(report.rows.is_empty());
    let rows = String::from_utf8(read(dir.path(), "out", "rows.csv")).unwrap();
    assert_eq!(rows.trim_end(), ROW_HEADER.join(","));
    let summary = String::from_utf8(read(dir.path(), "out", "summary.csv")).unwrap();
    assert!(summary.starts_with(&SUMMARY_HEADER.join(",")));
    assert_eq!(summary.lines().count(), 1 + local_edits().len());
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let write = |body: serde_json::Value| {
        let p = dir.path().join("c.json");
        std::fs::write(&p, body.to_string()).unwrap();
        ExperimentConfig::load(p)
    };
    assert!(write(serde_json::json!({"schema_version": 2, "master_seed": 0, "out_dir": "o"})).is_err());
    assert!(write(serde_json::json!({"schema_version": 1, "master_seed": 0})).is_err());
    assert!(write(serde_json::json!({
        "schema_version": 1, "master_seed": 0, "out_dir": "o",
        "manifest": [{"id": "a", "path": "missing.sarf"}]
    }))
    .is_err());
    assert!(write(serde_json::json!({
        "schema_version": 1, "master_seed": 0, "out_dir": "o", "splice": {"edits": ["spin"]}
    }))
    .is_err());
    let ok = write(serde_json::json!({"schema_version": 1, "master_seed": 0, "out_dir": "o"})).unwrap();
    assert_eq!(ok.splice.edits.len(), 7);
    assert_eq!(ok.splice.region, [128, 128]);
    assert_eq!(ok.out_dir, dir.path().join("o"));
}

#[test]
fn full_batch_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_tiles(dir.path(), 10, 96);
    let detector = ResidualEnergy;

    let first = run_experiment(&config(dir.path(), manifest.clone(), "a"), Some(&detector)).unwrap();
    assert_eq!(first.rows.len(), 70);
    assert_eq!(first.failed(), 0, "{:?}", first.rows.iter().find(|r| r.error.is_some()));
    for row in &first.rows {
        let ssim = row.ssim.unwrap();
        assert!(ssim > 0.0 && ssim <= 1.0, "{}", row.id);
        assert!(row.msssim.is_some() && row.delta_enl_pct.is_some());
        let auc = row.auc.unwrap();
        assert!((0.5..=1.0).contains(&auc), "{}", row.id);
        assert!(row.edit_parameter.is_some());
    }
    assert_eq!(first.provenance.len(), 70);
    assert!(first
        .provenance
        .iter()
        .all(|p| p.splice.donor_tile != p.splice.target_tile));
    assert!(first.summary.iter().all(|s| s.rows == 10 && s.failed == 0));

    run_experiment(&config(dir.path(), manifest, "b"), Some(&detector)).unwrap();
    for file in ["rows.csv", "summary.csv", "provenance.json"] {
        assert_eq!(read(dir.path(), "a", file), read(dir.path(), "b", file), "{file}");
    }
}

#[test]
fn tiling_expands_items() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let scene = synthetic_scene(2 * n, n, &SceneParams::default(), 3).unwrap();
    write_raster(&Raster::Amplitude(scene.reflectivity), dir.path().join("big.sarf")).unwrap();
    let json = serde_json::json!({
        "schema_version": 1,
        "manifest": [{"id": "big", "path": "big.sarf"}],
        "tile": {"size": 64, "overlap": 32},
        "splice": {"edits": ["none"], "region": [16, 16]},
        "master_seed": 1,
        "out_dir": "out"
    });
    let path = dir.path().join("c.json");
    std::fs::write(&path, json.to_string()).unwrap();
    let report = run_experiment(&ExperimentConfig::load(path).unwrap(), None).unwrap();
    let items: Vec<&str> = report.rows.iter().map(|r| r.item.as_str()).collect();
    assert_eq!(items, ["big@0x0", "big@32x0", "big@64x0"]);
    assert!(report.rows.iter().all(|r| r.auc.is_none() && r.error.is_none()));
}

#[test]
fn item_failures_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_tiles(dir.path(), 2, 24);
    let json = serde_json::json!({
        "schema_version": 1,
        "manifest": manifest,
        "splice": {"edits": ["none"], "region": [64, 64]},
        "master_seed": 1,
        "out_dir": "out"
    });
    let path = dir.path().join("c.json");
    std::fs::write(&path, json.to_string()).unwrap();
    let report = run_experiment(&ExperimentConfig::load(path).unwrap(), None).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.failed(), 2);
    assert!(report.rows.iter().all(|r| r.ssim.is_none()));
}
