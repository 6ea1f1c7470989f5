//! Bicubic resizing, rotation and small Gaussian blurs on real planes.

use ndarray::{Array2, Axis};

use crate::spectral::{convolve_axis, gaussian_taps};

/// Keys cubic convolution kernel with `a = -0.5`.
#[inline]
fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

#[inline]
fn cubic_weights(x: f64) -> (isize, [f64; 4]) {
    let base = x.floor();
    let t = x - base;
    (
        base as isize - 1,
        [cubic(t + 1.0), cubic(t), cubic(1.0 - t), cubic(2.0 - t)],
    )
}

/// Resizes one axis with pixel-center alignment and edge replication.
fn resize_axis(plane: &Array2<f64>, out_len: usize, axis: Axis) -> Array2<f64> {
    let in_len = plane.len_of(axis);
    let scale = in_len as f64 / out_len as f64;
    let taps: Vec<(isize, [f64; 4])> = (0..out_len)
        .map(|i| cubic_weights((i as f64 + 0.5) * scale - 0.5))
        .collect();
    let clamp = |k: isize| k.clamp(0, in_len as isize - 1) as usize;
    let mut shape = plane.raw_dim();
    shape[axis.index()] = out_len;
    let mut out = Array2::zeros(shape);
    for (src, mut dst) in plane.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        for (d, (start, w)) in dst.iter_mut().zip(&taps) {
            *d = (0..4).map(|k| w[k] * src[clamp(start + k as isize)]).sum();
        }
    }
    out
}

/// Bicubic resize to exactly `height` x `width`.
pub fn resize(plane: &Array2<f64>, height: usize, width: usize) -> Array2<f64> {
    let rows = resize_axis(plane, width.max(1), Axis(1));
    resize_axis(&rows, height.max(1), Axis(0))
}

/// Output size for a uniform scale factor.
pub fn scaled_dims(dim: (usize, usize), factor: f64) -> (usize, usize) {
    (
        ((dim.0 as f64 * factor).round() as usize).max(1),
        ((dim.1 as f64 * factor).round() as usize).max(1),
    )
}

/// `(sin, cos)` with exact values on multiples of 90 degrees.
fn sin_cos_deg(angle: f64) -> (f64, f64) {
    let q = angle / 90.0;
    if q == q.round() {
        match (q as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle.to_radians().sin_cos()
    }
}

/// Canvas size holding the whole rotated image.
pub fn rotated_dims(dim: (usize, usize), angle_deg: f64) -> (usize, usize) {
    let (s, c) = sin_cos_deg(angle_deg);
    let (h, w) = (dim.0 as f64, dim.1 as f64);
    let nh = (h * c.abs() + w * s.abs() - 1e-9).ceil().max(1.0);
    let nw = (w * c.abs() + h * s.abs() - 1e-9).ceil().max(1.0);
    (nh as usize, nw as usize)
}

/// Inverse-maps each output pixel of a counterclockwise rotation (as
/// displayed, rows pointing down) to its source coordinates.
fn rotation_sampler(dim: (usize, usize), angle_deg: f64) -> (usize, usize, impl Fn(usize, usize) -> (f64, f64)) {
    let (s, c) = sin_cos_deg(angle_deg);
    let (oh, ow) = rotated_dims(dim, angle_deg);
    let (cy, cx) = ((dim.0 as f64 - 1.0) / 2.0, (dim.1 as f64 - 1.0) / 2.0);
    let (ocy, ocx) = ((oh as f64 - 1.0) / 2.0, (ow as f64 - 1.0) / 2.0);
    let map = move |r: usize, col: usize| {
        let dr = r as f64 - ocy;
        let dx = col as f64 - ocx;
        (cy + s * dx + c * dr, cx + c * dx - s * dr)
    };
    (oh, ow, map)
}

/// Bicubic rotation by `angle_deg` counterclockwise onto an expanded canvas.
/// Pixels outside the source read as zero.
pub fn rotate(plane: &Array2<f64>, angle_deg: f64) -> Array2<f64> {
    let (h, w) = plane.dim();
    let (oh, ow, map) = rotation_sampler((h, w), angle_deg);
    let at = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            plane[(r as usize, c as usize)]
        }
    };
    Array2::from_shape_fn((oh, ow), |(r, col)| {
        let (sy, sx) = map(r, col);
        let (ry, wy) = cubic_weights(sy);
        let (rx, wx) = cubic_weights(sx);
        let mut acc = 0.0;
        for (i, wyi) in wy.iter().enumerate() {
            if *wyi == 0.0 {
                continue;
            }
            for (j, wxj) in wx.iter().enumerate() {
                if *wxj != 0.0 {
                    acc += wyi * wxj * at(ry + i as isize, rx + j as isize);
                }
            }
        }
        acc
    })
}

/// Rotates a binary stencil with the same geometry as [`rotate`] and
/// re-rasterizes it: a pixel is set when its bilinear coverage is at least 0.5.
pub fn rotate_stencil(stencil: &Array2<u8>, angle_deg: f64) -> Array2<u8> {
    let (h, w) = stencil.dim();
    let (oh, ow, map) = rotation_sampler((h, w), angle_deg);
    let at = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            stencil[(r as usize, c as usize)] as f64
        }
    };
    Array2::from_shape_fn((oh, ow), |(r, col)| {
        let (sy, sx) = map(r, col);
        let (y0, x0) = (sy.floor(), sx.floor());
        let (ty, tx) = (sy - y0, sx - x0);
        let (y0, x0) = (y0 as isize, x0 as isize);
        let cover = (1.0 - ty) * ((1.0 - tx) * at(y0, x0) + tx * at(y0, x0 + 1))
            + ty * ((1.0 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
        u8::from(cover >= 0.5 - 1e-12)
    })
}

/// Gaussian blur with a `2 * ceil(3 sigma) + 1` tap kernel, reflective edges.
pub fn gaussian_blur(plane: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let taps = gaussian_taps(sigma, 2 * radius + 1);
    let rows = convolve_axis(plane, &taps, Axis(1));
    convolve_axis(&rows, &taps, Axis(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_partition_of_unity() {
        for &t in &[0.0, 0.1, 0.5, 0.77] {
            let (_, w) = cubic_weights(3.0 + t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let (start, w) = cubic_weights(5.0);
        assert_eq!(start, 4);
        assert_eq!(w, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_resize() {
        let p = Array2::from_shape_fn((5, 7), |(r, c)| (r * 7 + c) as f64);
        assert_eq!(resize(&p, 5, 7), p);
    }

    #[test]
    fn upscale_constant() {
        let p = Array2::from_elem((64, 64), 12.5);
        let out = resize(&p, 128, 128);
        assert_eq!(out.dim(), (128, 128));
        assert!(out.iter().all(|v| (v - 12.5).abs() < 1e-9));
    }

    #[test]
    fn rotation_zero_is_identity() {
        let p = Array2::from_shape_fn((4, 6), |(r, c)| (r * 6 + c) as f64);
        assert_eq!(rotate(&p, 0.0), p);
        assert_eq!(rotated_dims((4, 6), 90.0), (6, 4));
    }

    #[test]
    fn full_turn_stencil() {
        let s = Array2::from_shape_fn((5, 3), |(r, c)| u8::from(r >= c));
        assert_eq!(rotate_stencil(&s, 360.0), s);
        assert_eq!(rotate_stencil(&s, 180.0)[(0, 0)], s[(4, 2)]);
    }

    #[test]
    fn blur_preserves_constant() {
        let p = Array2::from_elem((9, 9), 4.0);
        assert!(gaussian_blur(&p, 0.5).iter().all(|v| (v - 4.0).abs() < 1e-12));
    }
}
