//! Complex speckle generation and multiplicative injection.
//!
//! Fully developed speckle has Rayleigh amplitude and uniform phase. In
//! phase-only mode the amplitude is fixed to 1. Each pixel consumes two
//! 64-bit words of the [`streams::SPECKLE`] stream at position
//! `2 * (row * width + col)`, so both modes share the phase draw for a
//! given seed and any row can be regenerated on its own.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{AmplitudeImage, ComplexImage};
use crate::rng::{streams, unit_f64, StreamKey};

/// Energy-preserving Rayleigh scale: `E[S^2] = 2 sigma^2 = 1`.
pub const DEFAULT_SIGMA_S: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpeckleMode {
    Full,
    #[default]
    PhaseOnly,
}

impl std::str::FromStr for SpeckleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "phase-only" | "phase_only" => Ok(Self::PhaseOnly),
            other => Err(Error::InvalidParameter(format!("speckle mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleField {
    re: Array2<f64>,
    im: Array2<f64>,
    mode: SpeckleMode,
    sigma_s: f64,
}

impl SpeckleField {
    pub fn re(&self) -> &Array2<f64> {
        &self.re
    }

    pub fn im(&self) -> &Array2<f64> {
        &self.im
    }

    pub fn mode(&self) -> SpeckleMode {
        self.mode
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    pub fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    pub fn amplitudes(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.dim());
        ndarray::Zip::from(&mut out)
            .and(&self.re)
            .and(&self.im)
            .for_each(|a, &r, &i| *a = r.hypot(i));
        out
    }

    /// Phases wrapped to `[0, 2pi)`.
    pub fn phases(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.dim());
        ndarray::Zip::from(&mut out)
            .and(&self.re)
            .and(&self.im)
            .for_each(|p, &r, &i| *p = i.atan2(r).rem_euclid(TAU));
        out
    }
}

/// Draws `(amplitude, phase)` for one pixel from its two keystream words.
#[inline]
fn draw_pixel(rng: &mut impl rand::RngCore, mode: SpeckleMode, sigma_s: f64) -> (f64, f64) {
    let u_amp = unit_f64(rng);
    let phase = TAU * unit_f64(rng);
    let amp = match mode {
        SpeckleMode::PhaseOnly => 1.0,
        // inverse CDF of Rayleigh(sigma); 1 - u lies in (0, 1]
        SpeckleMode::Full => sigma_s * (-2.0 * (1.0 - u_amp).ln()).sqrt(),
    };
    (amp, phase)
}

pub fn generate_speckle(
    height: usize,
    width: usize,
    mode: SpeckleMode,
    sigma_s: f64,
    seed: u64,
) -> Result<SpeckleField> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("empty speckle field".into()));
    }
    if mode == SpeckleMode::Full && !(sigma_s > 0.0 && sigma_s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Rayleigh scale must be positive, got {sigma_s}"
        )));
    }
    let key = StreamKey::new(seed, streams::SPECKLE);
    let mut re = Array2::zeros((height, width));
    let mut im = Array2::zeros((height, width));
    re.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(im.axis_iter_mut(Axis(0)).into_par_iter())
        .enumerate()
        .for_each(|(row, (mut re_row, mut im_row))| {
            let mut rng = key.rng_at((row * width) as u64 * 2);
            for (r, i) in re_row.iter_mut().zip(im_row.iter_mut()) {
                let (amp, phase) = draw_pixel(&mut rng, mode, sigma_s);
                let (s, c) = phase.sin_cos();
                *r = amp * c;
                *i = amp * s;
            }
        });
    Ok(SpeckleField {
        re,
        im,
        mode,
        sigma_s: if mode == SpeckleMode::Full { sigma_s } else { 1.0 },
    })
}

/// `out = amplitude * field`, pixel by pixel.
pub fn inject_speckle(amplitude: &AmplitudeImage, field: &SpeckleField) -> Result<ComplexImage> {
    if amplitude.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: amplitude.dim(),
            found: field.dim(),
        });
    }
    let a = amplitude.values();
    ComplexImage::new(a * &field.re, a * &field.im)
}
