//! 2D discrete Fourier transform, spectrum smoothing and radial profiles.
//!
//! Convention: the forward transform is unscaled, the inverse carries the
//! `1/(N*M)` factor. Spectra are stored DC-centered, with DC at
//! `(H/2, W/2)` (integer division).

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{AmplitudeImage, ComplexImage};

/// DC-centered 2D spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Array2<Complex64>,
}

impl Spectrum {
    /// Wraps a plane that is already DC-centered.
    pub fn from_centered(values: Array2<Complex64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn dc_index(&self) -> (usize, usize) {
        let (h, w) = self.dim();
        (h / 2, w / 2)
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm())
    }
}

fn fft_lanes(data: &mut Array2<Complex64>, axis: Axis, direction: FftDirection) {
    let len = data.len_of(axis);
    let fft = FftPlanner::new().plan_fft(len, direction);
    // Rows of a standard-layout array are contiguous; columns go through a
    // transposed copy.
    match axis {
        Axis(1) => {
            let slice = data.as_slice_mut().expect("standard layout");
            slice.par_chunks_mut(len).for_each(|row| fft.process(row));
        }
        _ => {
            let mut t = data.t().as_standard_layout().into_owned();
            let slice = t.as_slice_mut().unwrap();
            slice.par_chunks_mut(len).for_each(|col| fft.process(col));
            data.assign(&t.t());
        }
    }
}

/// In-place unscaled 2D FFT in natural (DC at origin) order.
pub fn fft2(data: &mut Array2<Complex64>, direction: FftDirection) {
    if !data.is_standard_layout() {
        *data = data.as_standard_layout().into_owned();
    }
    fft_lanes(data, Axis(1), direction);
    fft_lanes(data, Axis(0), direction);
}

/// Moves DC from `(0,0)` to `(H/2, W/2)`.
pub fn fftshift<T: Clone>(plane: &Array2<T>) -> Array2<T> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        plane[((r + h - h / 2) % h, (c + w - w / 2) % w)].clone()
    })
}

/// Inverse of [`fftshift`].
pub fn ifftshift<T: Clone>(plane: &Array2<T>) -> Array2<T> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(r, c)| plane[((r + h / 2) % h, (c + w / 2) % w)].clone())
}

/// Index of the frequency `-f` for the bin at centered position `pos`.
#[inline]
pub fn mirror_index(pos: usize, len: usize) -> usize {
    (2 * (len / 2) + len - pos) % len
}

/// Signed frequency offset from DC (in bins) of centered position `pos`.
#[inline]
pub fn centered_frequency(pos: usize, len: usize) -> f64 {
    pos as f64 - (len / 2) as f64
}

pub fn forward_dft_complex(image: &ComplexImage) -> Spectrum {
    let mut data = image.to_complex();
    fft2(&mut data, FftDirection::Forward);
    Spectrum {
        values: fftshift(&data),
    }
}

pub fn forward_dft_amplitude(image: &AmplitudeImage) -> Spectrum {
    forward_dft_plane(image.values())
}

/// Forward transform of a real plane.
pub fn forward_dft_plane(plane: &Array2<f64>) -> Spectrum {
    let mut data = plane.mapv(|v| Complex64::new(v, 0.0));
    fft2(&mut data, FftDirection::Forward);
    Spectrum {
        values: fftshift(&data),
    }
}

/// Inverse transform back to a raw complex plane (no finiteness check).
pub fn inverse_dft_plane(spectrum: &Spectrum) -> Array2<Complex64> {
    let mut data = ifftshift(&spectrum.values);
    fft2(&mut data, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    data.mapv_inplace(|z| z * scale);
    data
}

pub fn inverse_dft(spectrum: &Spectrum) -> Result<ComplexImage> {
    ComplexImage::from_complex(&inverse_dft_plane(spectrum))
}

/// Unit-sum 1D Gaussian taps of odd length `size`.
pub fn gaussian_taps(sigma: f64, size: usize) -> Vec<f64> {
    let radius = (size / 2) as f64;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - radius;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Unit-sum 2D Gaussian kernel; outer product of [`gaussian_taps`].
pub fn gaussian_kernel(sigma: f64, size: usize) -> Array2<f64> {
    let taps = gaussian_taps(sigma, size);
    Array2::from_shape_fn((size, size), |(i, j)| taps[i] * taps[j])
}

/// Half-sample symmetric reflection: `... b a | a b c ... y z | z y ...`.
#[inline]
pub(crate) fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// 1D same-size convolution with symmetric taps along `axis`, reflective padding.
pub(crate) fn convolve_axis(plane: &Array2<f64>, taps: &[f64], axis: Axis) -> Array2<f64> {
    let radius = (taps.len() / 2) as isize;
    let src = if axis == Axis(1) {
        plane.as_standard_layout().into_owned()
    } else {
        plane.t().as_standard_layout().into_owned()
    };
    let (lanes, len) = src.dim();
    let src_slice = src.as_slice().unwrap();
    let mut out = vec![0.0; lanes * len];
    out.par_chunks_mut(len)
        .zip(src_slice.par_chunks(len))
        .for_each(|(dst, lane)| {
            // Interior samples skip the reflection lookup.
            for (x, d) in dst.iter_mut().enumerate() {
                let xi = x as isize;
                let mut acc = 0.0;
                if xi - radius >= 0 && xi + radius < len as isize {
                    let start = (xi - radius) as usize;
                    for (t, v) in taps.iter().zip(&lane[start..start + taps.len()]) {
                        acc += t * v;
                    }
                } else {
                    for (k, t) in taps.iter().enumerate() {
                        acc += t * lane[reflect(xi + k as isize - radius, len)];
                    }
                }
                *d = acc;
            }
        });
    let out = Array2::from_shape_vec((lanes, len), out).unwrap();
    if axis == Axis(1) {
        out
    } else {
        out.t().as_standard_layout().into_owned()
    }
}

/// Same-size 2D convolution of a nonnegative magnitude plane with a unit-sum
/// Gaussian kernel of odd side `kernel_size`, reflective padding. The kernel
/// is separable, so the convolution runs as two 1D passes.
pub fn smooth_spectrum(mag: &Array2<f64>, sigma: f64, kernel_size: usize) -> Result<Array2<f64>> {
    if kernel_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "smoothing kernel size must be odd, got {kernel_size}"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothing sigma must be positive, got {sigma}"
        )));
    }
    if mag.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "magnitude plane must be finite and nonnegative".into(),
        ));
    }
    let taps = gaussian_taps(sigma, kernel_size);
    let rows = convolve_axis(mag, &taps, Axis(1));
    let mut out = convolve_axis(&rows, &taps, Axis(0));
    out.mapv_inplace(|v| v.max(0.0));
    Ok(out)
}

/// Mean squared magnitude per integer-radius annulus around DC.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    /// Radius in cycles per sample, relative to the shorter axis.
    pub bin_centers: Vec<f64>,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,mean_sq_magnitude,count\n");
        for (r, (v, c)) in self.values.iter().zip(&self.counts).enumerate() {
            s.push_str(&format!("{r},{v:e},{c}\n"));
        }
        s
    }
}

/// Ring-mean of `|S|^2` over rounded Euclidean radius (in bins) from DC.
pub fn azimuthal_profile(spectrum: &Spectrum) -> RadialProfile {
    radial_profile_of(&spectrum.values.mapv(|z| z.norm_sqr()))
}

/// Ring-mean of an arbitrary DC-centered real plane.
pub fn radial_profile_of(plane: &Array2<f64>) -> RadialProfile {
    let (h, w) = plane.dim();
    let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
    let radius_of = |r: usize, c: usize| {
        let dy = r as f64 - cy;
        let dx = c as f64 - cx;
        (dy * dy + dx * dx).sqrt().round() as usize
    };
    let max_r = [(0, 0), (0, w - 1), (h - 1, 0), (h - 1, w - 1)]
        .iter()
        .map(|&(r, c)| radius_of(r, c))
        .max()
        .unwrap();
    let mut sums = vec![0.0; max_r + 1];
    let mut counts = vec![0usize; max_r + 1];
    for ((r, c), &v) in plane.indexed_iter() {
        let k = radius_of(r, c);
        sums[k] += v;
        counts[k] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();
    let norm = h.min(w) as f64;
    RadialProfile {
        bin_centers: (0..=max_r).map(|r| r as f64 / norm).collect(),
        values,
        counts,
    }
}
