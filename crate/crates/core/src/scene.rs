//! Synthetic reflectivity maps for closure tests and demos.
//!
//! A scene is a constant background with a few rectangular and elliptical
//! targets of other levels. Background pixels far enough from every target
//! and from the border form the homogeneous region used for ENL.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{AmplitudeImage, TamperMask};
use crate::rng::{streams, unit_f64, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub background: f64,
    /// Target levels are drawn from `[min, max)`.
    pub level_range: (f64, f64),
    pub targets: usize,
    /// Target half-extent as a fraction of the shorter side, `[min, max)`.
    pub size_range: (f64, f64),
    /// Distance kept from targets and borders by the homogeneous region.
    pub margin: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            background: 300.0,
            level_range: (80.0, 1200.0),
            targets: 6,
            size_range: (0.03, 0.09),
            margin: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub reflectivity: AmplitudeImage,
    pub homogeneous: TamperMask,
}

pub fn synthetic_scene(height: usize, width: usize, params: &SceneParams, seed: u64) -> Result<Scene> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("empty scene".into()));
    }
    let (lo, hi) = params.level_range;
    if !(params.background >= 0.0 && lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter("scene levels".into()));
    }
    let mut rng = StreamKey::new(seed, streams::SCENE).rng();
    let side = height.min(width) as f64;
    let mut values = Array2::from_elem((height, width), params.background);
    let mut target = Array2::<bool>::from_elem((height, width), false);
    for _ in 0..params.targets {
        let cy = unit_f64(&mut rng) * height as f64;
        let cx = unit_f64(&mut rng) * width as f64;
        let span = |rng: &mut _| {
            let (a, b) = params.size_range;
            side * (a + (b - a) * unit_f64(rng))
        };
        let ry = span(&mut rng).max(1.0);
        let rx = span(&mut rng).max(1.0);
        let level = lo + (hi - lo) * unit_f64(&mut rng);
        let ellipse = rng.random_bool(0.5);
        for ((r, c), v) in values.indexed_iter_mut() {
            let dy = (r as f64 - cy) / ry;
            let dx = (c as f64 - cx) / rx;
            let inside = if ellipse {
                dy * dy + dx * dx <= 1.0
            } else {
                dy.abs() <= 1.0 && dx.abs() <= 1.0
            };
            if inside {
                *v = level;
                target[(r, c)] = true;
            }
        }
    }

    let m = params.margin as isize;
    let (h, w) = (height as isize, width as isize);
    let homogeneous = Array2::from_shape_fn((height, width), |(r, c)| {
        let (r, c) = (r as isize, c as isize);
        if r < m || c < m || r >= h - m || c >= w - m {
            return 0;
        }
        for dr in -m..=m {
            for dc in -m..=m {
                if target[((r + dr) as usize, (c + dc) as usize)] {
                    return 0;
                }
            }
        }
        1
    });
    Ok(Scene {
        reflectivity: AmplitudeImage::from_values(values)?,
        homogeneous: TamperMask::new(homogeneous)?,
    })
}
