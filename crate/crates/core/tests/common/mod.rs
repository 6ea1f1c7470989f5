//! Helpers shared by the integration tests. Each test crate uses a subset.
#![allow(dead_code)]

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use sarfx::metrics::{Detector, FingerprintMap};
use sarfx::raster::{AmplitudeImage, ComplexImage};
use sarfx::rng::{unit_f64, StreamKey};

pub fn uniform_plane(h: usize, w: usize, scale: f64, seed: u64) -> Array2<f64> {
    let mut rng = StreamKey::new(seed, 1000).rng();
    Array2::from_shape_fn((h, w), |_| scale * unit_f64(&mut rng))
}

pub fn random_amplitude(h: usize, w: usize, scale: f64, seed: u64) -> AmplitudeImage {
    AmplitudeImage::from_values(uniform_plane(h, w, scale, seed)).unwrap()
}

pub fn random_complex(h: usize, w: usize, seed: u64) -> ComplexImage {
    ComplexImage::new(
        uniform_plane(h, w, 2.0, seed) - 1.0,
        uniform_plane(h, w, 2.0, seed + 1) - 1.0,
    )
    .unwrap()
}

/// Textbook O(N^2 M^2) DFT, DC moved to `(H/2, W/2)`.
pub fn naive_dft_centered(input: &Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let (h, w) = input.dim();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = Array2::zeros((h, w));
    for u in 0..h {
        for v in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase = sign * std::f64::consts::TAU * ((u * y) as f64 / h as f64 + (v * x) as f64 / w as f64);
                    acc += input[(y, x)] * Complex64::from_polar(1.0, phase);
                }
            }
            if inverse {
                acc /= (h * w) as f64;
            }
            out[((u + h / 2) % h, (v + w / 2) % w)] = acc;
        }
    }
    out
}

/// Undoes the centering of [`naive_dft_centered`].
pub fn uncenter(plane: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(r, c)| plane[((r + h / 2) % h, (c + w / 2) % w)])
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Zero-mean normalized cross-correlation.
pub fn ncc(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let ma = a.mean().unwrap();
    let mb = b.mean().unwrap();
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da * db).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Stand-in detector: local variance of a 3x3 high-pass residual,
/// averaged over a 9x9 box.
pub struct ResidualEnergy;

impl Detector for ResidualEnergy {
    fn name(&self) -> &str {
        "residual-energy"
    }

    fn fingerprint(&self, image: &AmplitudeImage) -> sarfx::Result<FingerprintMap> {
        let v = image.values();
        let (h, w) = v.dim();
        let at = |r: isize, c: isize| v[(r.clamp(0, h as isize - 1) as usize, c.clamp(0, w as isize - 1) as usize)];
        let residual = Array2::from_shape_fn((h, w), |(r, c)| {
            let (r, c) = (r as isize, c as isize);
            let mut mean = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    mean += at(r + dr, c + dc);
                }
            }
            let e = at(r, c) - mean / 9.0;
            e * e
        });
        let k = 4isize;
        let res =
            |r: isize, c: isize| residual[(r.clamp(0, h as isize - 1) as usize, c.clamp(0, w as isize - 1) as usize)];
        let energy = Array2::from_shape_fn((h, w), |(r, c)| {
            let mut s = 0.0;
            for dr in -k..=k {
                for dc in -k..=k {
                    s += res(r as isize + dr, c as isize + dc);
                }
            }
            (s / ((2 * k + 1) * (2 * k + 1)) as f64).ln_1p()
        });
        FingerprintMap::new(energy)
    }
}
