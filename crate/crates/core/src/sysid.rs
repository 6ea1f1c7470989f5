//! Estimation of the end-to-end SAR system frequency response.
//!
//! Every estimate starts from the smoothed magnitude spectrum of the
//! available data and ends as a nonnegative, centrally symmetric response
//! with unit peak gain. Three estimators are provided:
//!
//! * a separable 2D Gaussian fitted by least squares,
//! * a separable 2D raised cosine fitted by least squares,
//! * a direct estimate that keeps the real part of the inverse transform of
//!   the smoothed spectrum and takes the magnitude of its transform.
//!
//! Frequencies are measured in bins from DC; column frequencies are `x`
//! (range), row frequencies are `y` (azimuth).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{self, Evaluation, LeastSquaresProblem, SolverOptions};
use crate::raster::{self, AmplitudeImage, ComplexImage, Raster};
use crate::spectral::{
    centered_frequency, forward_dft_amplitude, forward_dft_complex, forward_dft_plane, inverse_dft_plane, mirror_index,
    smooth_spectrum, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gaussian,
    RaisedCosine,
    Direct,
    Known,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "raised-cosine" | "raised_cosine" => Ok(Self::RaisedCosine),
            "direct" => Ok(Self::Direct),
            "known" => Ok(Self::Known),
            other => Err(Error::InvalidParameter(format!("strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::RaisedCosine => "raised-cosine",
            Self::Direct => "direct",
            Self::Known => "known",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAxis {
    pub gain: f64,
    pub mean: f64,
    pub std: f64,
}

impl GaussianAxis {
    pub fn eval(&self, f: f64) -> f64 {
        let d = f - self.mean;
        self.gain * (-d * d / (2.0 * self.std * self.std)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFitParams {
    pub x: GaussianAxis,
    pub y: GaussianAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaisedCosineAxis {
    pub a: f64,
    pub b: f64,
    pub cutoff: f64,
}

impl RaisedCosineAxis {
    /// `A - B cos(pi (|f| - fc) / fc)` inside the cutoff, zero beyond.
    pub fn eval(&self, f: f64) -> f64 {
        let f = f.abs();
        if f > self.cutoff {
            0.0
        } else {
            self.a - self.b * (PI * (f - self.cutoff) / self.cutoff).cos()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaisedCosineFitParams {
    pub x: RaisedCosineAxis,
    pub y: RaisedCosineAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitParams {
    Gaussian(GaussianFitParams),
    RaisedCosine(RaisedCosineFitParams),
}

/// Fitted parameters with the sum of squared residuals on the fitted plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit<P> {
    pub params: P,
    pub residual: f64,
    pub iterations: usize,
}

/// Nonnegative, centrally symmetric, unit-peak response on the DC-centered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    values: Array2<f64>,
    strategy: Strategy,
    fits: Vec<FitParams>,
}

pub const SYMMETRY_TOL: f64 = 1e-9;
pub const PEAK_TOL: f64 = 1e-12;

impl TransferFunction {
    /// Validates a supplied response and keeps it unchanged.
    pub fn known(values: Array2<f64>) -> Result<Self> {
        validate_response(&values)?;
        Ok(Self {
            values,
            strategy: Strategy::Known,
            fits: Vec::new(),
        })
    }

    /// All-pass response.
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            values: Array2::ones((height, width)),
            strategy: Strategy::Known,
            fits: Vec::new(),
        }
    }

    /// Symmetrizes and peak-normalizes an arbitrary nonnegative plane.
    fn from_plane(plane: Array2<f64>, strategy: Strategy, fits: Vec<FitParams>) -> Result<Self> {
        let values = normalize_peak(&symmetrize(&plane))?;
        validate_response(&values)?;
        Ok(Self { values, strategy, fits })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Per-source fit parameters for curve-fit strategies.
    pub fn fits(&self) -> &[FitParams] {
        &self.fits
    }

    pub fn metadata(&self) -> TransferFunctionMeta {
        TransferFunctionMeta {
            strategy: self.strategy,
            height: self.values.nrows(),
            width: self.values.ncols(),
            fits: self.fits.clone(),
        }
    }

    /// Writes the response as an `amplitude_f64` raster plus a JSON sidecar
    /// at `<path>.json`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let img = AmplitudeImage::new(self.values.clone(), raster::DEFAULT_DYNAMIC_RANGE_BITS)?;
        raster::write_raster(&Raster::Amplitude(img), path)?;
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&self.metadata())?)?;
        Ok(())
    }

    /// Reads a response raster, and its sidecar when present.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let values = raster::read_amplitude(path)?.into_values();
        validate_response(&values)?;
        let side = sidecar_path(path);
        let (strategy, fits) = if side.exists() {
            let meta: TransferFunctionMeta = serde_json::from_slice(&fs::read(side)?)?;
            (meta.strategy, meta.fits)
        } else {
            (Strategy::Known, Vec::new())
        };
        Ok(Self { values, strategy, fits })
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunctionMeta {
    pub strategy: Strategy,
    pub height: usize,
    pub width: usize,
    #[serde(default)]
    pub fits: Vec<FitParams>,
}

/// Checks the response constraints: finite, nonnegative, centrally
/// symmetric and peak gain 1.
pub fn validate_response(values: &Array2<f64>) -> Result<()> {
    let (h, w) = values.dim();
    if h == 0 || w == 0 {
        return Err(Error::InvalidParameter("empty transfer function".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for ((r, c), &v) in values.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: r, col: c });
        }
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "transfer function is negative ({v}) at ({r}, {c})"
            )));
        }
        let m = values[(mirror_index(r, h), mirror_index(c, w))];
        if (v - m).abs() > SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "transfer function is not centrally symmetric at ({r}, {c}): {v} vs {m}"
            )));
        }
        max = max.max(v);
    }
    if (max - 1.0).abs() > PEAK_TOL {
        return Err(Error::InvalidParameter(format!(
            "transfer function peak is {max}, expected 1"
        )));
    }
    Ok(())
}

/// `(H(f) + H(-f)) / 2`; exactly symmetric in floating point.
pub fn symmetrize(plane: &Array2<f64>) -> Array2<f64> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        0.5 * (plane[(r, c)] + plane[(mirror_index(r, h), mirror_index(c, w))])
    })
}

pub fn normalize_peak(plane: &Array2<f64>) -> Result<Array2<f64>> {
    let max = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Degenerate(format!("response peak is {max}; cannot normalize")));
    }
    Ok(plane.mapv(|v| v / max))
}

/// Divides by the square root of the plane's energy.
pub fn normalize_energy(plane: &Array2<f64>) -> Result<Array2<f64>> {
    let energy: f64 = plane.iter().map(|v| v * v).sum();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Degenerate("zero-energy spectrum".into()));
    }
    let norm = energy.sqrt();
    Ok(plane.mapv(|v| v / norm))
}

/// Gaussian kernel used to smooth magnitude spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub sigma: f64,
    pub kernel_size: usize,
}

impl Default for SmoothingParams {
    /// Values for 1024x1024 tiles.
    fn default() -> Self {
        Self {
            sigma: 100.0,
            kernel_size: 601,
        }
    }
}

impl SmoothingParams {
    /// Defaults for tiles of at least 1024 pixels; smaller inputs scale the
    /// kernel with the shorter side (the next odd integer at or above
    /// `0.587 * side`) and keep the kernel-to-sigma ratio of 6.01.
    pub fn for_dims(height: usize, width: usize) -> Self {
        let side = height.min(width);
        if side >= 1024 {
            return Self::default();
        }
        let mut k = ((0.587 * side as f64).ceil() as usize).max(1);
        if k.is_multiple_of(2) {
            k += 1;
        }
        Self {
            sigma: k as f64 / 6.01,
            kernel_size: k,
        }
    }
}

/// Data available to the estimator.
#[derive(Debug, Clone)]
pub enum Sources {
    /// One or more complex images from the same system.
    Complex(Vec<ComplexImage>),
    /// Only the amplitude image under attack.
    Amplitude(AmplitudeImage),
}

impl Sources {
    fn dims(&self) -> Result<(usize, usize)> {
        match self {
            Sources::Amplitude(a) => Ok(a.dim()),
            Sources::Complex(list) => {
                let first = list
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("no source images".into()))?;
                for img in list {
                    if img.dim() != first.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: first.dim(),
                            found: img.dim(),
                        });
                    }
                }
                Ok(first.dim())
            }
        }
    }
}

/// `|F(image)|`, DC-centered.
pub fn magnitude_spectrum(image: &ComplexImage) -> Array2<f64> {
    forward_dft_complex(image).magnitude()
}

/// Amplitude images are transformed as real-valued signals.
pub fn magnitude_spectrum_amplitude(image: &AmplitudeImage) -> Array2<f64> {
    forward_dft_amplitude(image).magnitude()
}

fn axis_frequencies(len: usize) -> Vec<f64> {
    (0..len).map(|p| centered_frequency(p, len)).collect()
}

fn check_normalized(plane: &Array2<f64>) -> Result<()> {
    let energy: f64 = plane.iter().map(|v| v * v).sum();
    if (energy - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "fit target must have unit energy, has {energy}"
        )));
    }
    if plane.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "fit target must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Axis factor and its two partials at one frequency.
type AxisTerms = (f64, f64, f64);

/// Separable model `P * X(fx; a) * Y(fy; b)` with three per-axis shape
/// values: the axis factor and its derivatives with respect to the two
/// per-axis parameters.
trait SeparableModel: Sync {
    /// Axis factor and its partials w.r.t. the two axis parameters.
    fn axis(&self, f: f64, p0: f64, p1: f64) -> AxisTerms;
    fn project(&self, params: &mut [f64]);
}

struct SeparableFit<'a, M> {
    target: &'a Array2<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    model: M,
}

impl<'a, M: SeparableModel> SeparableFit<'a, M> {
    fn new(target: &'a Array2<f64>, model: M) -> Self {
        let (h, w) = target.dim();
        Self {
            target,
            fx: axis_frequencies(w),
            fy: axis_frequencies(h),
            model,
        }
    }

    fn axis_tables(&self, p: &[f64]) -> (Vec<AxisTerms>, Vec<AxisTerms>) {
        let xs = self.fx.iter().map(|&f| self.model.axis(f, p[1], p[2])).collect();
        let ys = self.fy.iter().map(|&f| self.model.axis(f, p[3], p[4])).collect();
        (xs, ys)
    }
}

impl<M: SeparableModel> LeastSquaresProblem for SeparableFit<'_, M> {
    fn num_params(&self) -> usize {
        5
    }

    fn cost(&self, p: &[f64]) -> f64 {
        let (xs, ys) = self.axis_tables(p);
        // per-row partials collected in order, then summed sequentially so the
        // result does not depend on the thread count
        let rows: Vec<f64> = self
            .target
            .outer_iter()
            .into_par_iter()
            .zip(ys.par_iter())
            .map(|(row, y)| {
                row.iter()
                    .zip(&xs)
                    .map(|(t, x)| {
                        let r = p[0] * x.0 * y.0 - t;
                        r * r
                    })
                    .sum::<f64>()
            })
            .collect();
        let sum: f64 = rows.iter().sum();
        0.5 * sum
    }

    fn evaluate(&self, p: &[f64]) -> Evaluation {
        let (xs, ys) = self.axis_tables(p);
        let (jtj, jtr, sum) = self
            .target
            .outer_iter()
            .into_par_iter()
            .zip(ys.par_iter())
            .map(|(row, y)| {
                let mut jtj = [[0.0; 5]; 5];
                let mut jtr = [0.0; 5];
                let mut sum = 0.0;
                for (t, x) in row.iter().zip(&xs) {
                    let m = x.0 * y.0;
                    let r = p[0] * m - t;
                    let j = [
                        m,
                        p[0] * x.1 * y.0,
                        p[0] * x.2 * y.0,
                        p[0] * x.0 * y.1,
                        p[0] * x.0 * y.2,
                    ];
                    for a in 0..5 {
                        jtr[a] += j[a] * r;
                        for b in a..5 {
                            jtj[a][b] += j[a] * j[b];
                        }
                    }
                    sum += r * r;
                }
                (jtj, jtr, sum)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(([[0.0; 5]; 5], [0.0; 5], 0.0), |mut acc, part| {
                for a in 0..5 {
                    acc.1[a] += part.1[a];
                    for b in 0..5 {
                        acc.0[a][b] += part.0[a][b];
                    }
                }
                acc.2 += part.2;
                acc
            });
        let jtj = DMatrix::from_fn(5, 5, |a, b| if a <= b { jtj[a][b] } else { jtj[b][a] });
        Evaluation {
            cost: 0.5 * sum,
            jtj,
            jtr: DVector::from_row_slice(&jtr),
        }
    }

    fn project(&self, params: &mut [f64]) {
        params[0] = params[0].max(1e-300);
        self.model.project(params);
    }
}

struct GaussianModel;

impl SeparableModel for GaussianModel {
    fn axis(&self, f: f64, mean: f64, std: f64) -> (f64, f64, f64) {
        let d = f - mean;
        let s2 = std * std;
        let e = (-d * d / (2.0 * s2)).exp();
        (e, e * d / s2, e * d * d / (s2 * std))
    }

    fn project(&self, p: &mut [f64]) {
        p[2] = p[2].max(1e-3);
        p[4] = p[4].max(1e-3);
    }
}

struct RaisedCosineModel {
    nyquist_x: f64,
    nyquist_y: f64,
}

impl SeparableModel for RaisedCosineModel {
    /// Axis factor `1 - rho cos(theta)`, `theta = pi (|f| - fc) / fc`.
    fn axis(&self, f: f64, rho: f64, fc: f64) -> (f64, f64, f64) {
        let f = f.abs();
        if f > fc {
            return (0.0, 0.0, 0.0);
        }
        let theta = PI * (f - fc) / fc;
        let (s, c) = theta.sin_cos();
        (1.0 - rho * c, -c, -rho * s * PI * f / (fc * fc))
    }

    fn project(&self, p: &mut [f64]) {
        p[1] = p[1].max(1e-12);
        p[3] = p[3].max(1e-12);
        p[2] = p[2].clamp(0.5, self.nyquist_x);
        p[4] = p[4].clamp(0.5, self.nyquist_y);
    }
}

/// Marginal sums along rows (`x`) and columns (`y`).
fn marginals(plane: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let x = plane.sum_axis(ndarray::Axis(0)).to_vec();
    let y = plane.sum_axis(ndarray::Axis(1)).to_vec();
    (x, y)
}

fn moments(marginal: &[f64]) -> (f64, f64) {
    let len = marginal.len();
    let total: f64 = marginal.iter().sum();
    if !(total > 0.0) {
        return (0.0, len as f64 / 4.0);
    }
    let mean = marginal
        .iter()
        .enumerate()
        .map(|(i, m)| centered_frequency(i, len) * m)
        .sum::<f64>()
        / total;
    let var = marginal
        .iter()
        .enumerate()
        .map(|(i, m)| (centered_frequency(i, len) - mean).powi(2) * m)
        .sum::<f64>()
        / total;
    (mean, var.sqrt().max(1.0))
}

/// Marginal averaged over `+f` and `-f`, indexed by `|f|` in bins.
fn fold(marginal: &[f64]) -> Vec<f64> {
    let len = marginal.len();
    let dc = len / 2;
    (0..=len / 2)
        .map(|k| {
            let pos = marginal.get(dc + k).copied();
            let neg = dc.checked_sub(k).map(|i| marginal[i]);
            match (pos, neg) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// First |f| at which the folded marginal drops below 5% of its peak,
/// placed half a bin inside.
fn initial_cutoff(folded: &[f64], nyquist: f64) -> f64 {
    let peak = folded.iter().copied().fold(0.0, f64::max);
    folded
        .iter()
        .position(|&v| v < 0.05 * peak)
        .map(|k| (k as f64 - 0.5).max(0.5))
        .unwrap_or(nyquist)
        .min(nyquist)
}

/// `rho` matching the ratio between the last in-band bin and DC.
fn initial_rho(folded: &[f64], cutoff: f64) -> f64 {
    let k = (cutoff.floor() as usize).min(folded.len() - 1);
    if folded[0] <= 0.0 || k == 0 {
        return 1.0;
    }
    let q = folded[k] / folded[0];
    let cos = (PI * (k as f64 - cutoff) / cutoff).cos();
    ((1.0 - q) / (q + cos)).clamp(0.05, 1.0)
}

fn solver_options() -> SolverOptions {
    SolverOptions::default()
}

/// Least-squares fit of `G_x(f_x) G_y(f_y)` to a unit-energy magnitude plane.
/// The two axis gains are only identifiable as a product; it is split evenly.
pub fn fit_gaussian(target: &Array2<f64>) -> Result<Fit<GaussianFitParams>> {
    check_normalized(target)?;
    let (mx, my) = marginals(target);
    let (mean_x, std_x) = moments(&mx);
    let (mean_y, std_y) = moments(&my);
    let peak = target.iter().copied().fold(0.0, f64::max);
    let init = [peak, mean_x, std_x, mean_y, std_y];
    let problem = SeparableFit::new(target, GaussianModel);
    let sol = lm::solve(&problem, &init, &solver_options())?;
    let p = &sol.params;
    let gain = p[0].sqrt();
    Ok(Fit {
        params: GaussianFitParams {
            x: GaussianAxis {
                gain,
                mean: p[1],
                std: p[2].abs(),
            },
            y: GaussianAxis {
                gain,
                mean: p[3],
                std: p[4].abs(),
            },
        },
        residual: 2.0 * sol.cost,
        iterations: sol.iterations,
    })
}

/// Least-squares fit of `R_x(f_x) R_y(f_y)` to a unit-energy magnitude plane.
/// Internally each axis is `1 - rho cos(.)` under one product gain `P`;
/// reported as `A = sqrt(P)`, `B = rho sqrt(P)` per axis.
pub fn fit_raised_cosine(target: &Array2<f64>) -> Result<Fit<RaisedCosineFitParams>> {
    check_normalized(target)?;
    let (h, w) = target.dim();
    let (mx, my) = marginals(target);
    let peak = target.iter().copied().fold(0.0, f64::max);
    let (fx, fy) = (fold(&mx), fold(&my));
    let (nx, ny) = (w as f64 / 2.0, h as f64 / 2.0);
    let (cx, cy) = (initial_cutoff(&fx, nx), initial_cutoff(&fy, ny));
    let problem = SeparableFit::new(
        target,
        RaisedCosineModel {
            nyquist_x: nx,
            nyquist_y: ny,
        },
    );
    // the hard edge at the cutoff gives no gradient from outside the band,
    // so start from the observed edge height as well as from rho = 1
    let mut best: Option<lm::Solution> = None;
    let mut failure = None;
    for (rx, ry) in [(initial_rho(&fx, cx), initial_rho(&fy, cy)), (1.0, 1.0)] {
        let init = [peak / ((1.0 + rx) * (1.0 + ry)), rx, cx, ry, cy];
        match lm::solve(&problem, &init, &solver_options()) {
            Ok(sol) if best.as_ref().is_none_or(|b| sol.cost < b.cost) => best = Some(sol),
            Ok(_) => {}
            Err(e) => failure = Some(e),
        }
    }
    let sol = match (best, failure) {
        (Some(sol), _) => sol,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("two starts were tried"),
    };
    let p = &sol.params;
    let a = p[0].sqrt();
    Ok(Fit {
        params: RaisedCosineFitParams {
            x: RaisedCosineAxis {
                a,
                b: p[1] * a,
                cutoff: p[2],
            },
            y: RaisedCosineAxis {
                a,
                b: p[3] * a,
                cutoff: p[4],
            },
        },
        residual: 2.0 * sol.cost,
        iterations: sol.iterations,
    })
}

/// Evaluates a separable pair of axis responses on the DC-centered grid.
/// Each axis is made even (`(h(f) + h(-f)) / 2`) and clamped at zero.
fn separable_grid(height: usize, width: usize, fx: impl Fn(f64) -> f64, fy: impl Fn(f64) -> f64) -> Array2<f64> {
    let even = |f: &dyn Fn(f64) -> f64, v: f64| (0.5 * (f(v) + f(-v))).max(0.0);
    let xs: Vec<f64> = axis_frequencies(width).iter().map(|&v| even(&fx, v)).collect();
    let ys: Vec<f64> = axis_frequencies(height).iter().map(|&v| even(&fy, v)).collect();
    Array2::from_shape_fn((height, width), |(r, c)| ys[r] * xs[c])
}

/// Unnormalized Gaussian response on the grid.
pub fn gaussian_response(params: &GaussianFitParams, height: usize, width: usize) -> Array2<f64> {
    separable_grid(height, width, |f| params.x.eval(f), |f| params.y.eval(f))
}

/// Unnormalized raised-cosine response on the grid.
pub fn raised_cosine_response(params: &RaisedCosineFitParams, height: usize, width: usize) -> Array2<f64> {
    separable_grid(height, width, |f| params.x.eval(f), |f| params.y.eval(f))
}

/// Peak-normalized response for given raised-cosine parameters.
pub fn raised_cosine_transfer_function(
    params: &RaisedCosineFitParams,
    height: usize,
    width: usize,
) -> Result<TransferFunction> {
    TransferFunction::from_plane(
        raised_cosine_response(params, height, width),
        Strategy::RaisedCosine,
        vec![FitParams::RaisedCosine(*params)],
    )
}

/// Peak-normalized response for given Gaussian parameters.
pub fn gaussian_transfer_function(params: &GaussianFitParams, height: usize, width: usize) -> Result<TransferFunction> {
    TransferFunction::from_plane(
        gaussian_response(params, height, width),
        Strategy::Gaussian,
        vec![FitParams::Gaussian(*params)],
    )
}

/// `h = Re(IF(F_K))`, `H = |F(h)| / max`.
pub fn estimate_direct(smoothed: &Array2<f64>) -> Result<TransferFunction> {
    if smoothed.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "smoothed magnitude must be finite and nonnegative".into(),
        ));
    }
    if smoothed.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all-zero magnitude spectrum".into()));
    }
    let spectrum = Spectrum::from_centered(smoothed.mapv(|v| v.into()));
    let impulse = inverse_dft_plane(&spectrum).mapv(|z| z.re);
    let response = forward_dft_plane(&impulse).magnitude();
    TransferFunction::from_plane(response, Strategy::Direct, Vec::new())
}

fn estimate_single(
    magnitude: &Array2<f64>,
    strategy: Strategy,
    smoothing: SmoothingParams,
) -> Result<(Array2<f64>, Option<FitParams>)> {
    let smoothed = smooth_spectrum(magnitude, smoothing.sigma, smoothing.kernel_size)?;
    let (h, w) = smoothed.dim();
    match strategy {
        Strategy::Direct => Ok((estimate_direct(&smoothed)?.values, None)),
        Strategy::Gaussian => {
            let fit = fit_gaussian(&normalize_energy(&smoothed)?)?;
            let tf = gaussian_transfer_function(&fit.params, h, w)?;
            Ok((tf.values, Some(FitParams::Gaussian(fit.params))))
        }
        Strategy::RaisedCosine => {
            let fit = fit_raised_cosine(&normalize_energy(&smoothed)?)?;
            let tf = raised_cosine_transfer_function(&fit.params, h, w)?;
            Ok((tf.values, Some(FitParams::RaisedCosine(fit.params))))
        }
        Strategy::Known => Err(Error::Unsupported("a known response is supplied, not estimated".into())),
    }
}

/// Estimates the system response from the available data. With several
/// complex sources the per-source peak-normalized responses are averaged in
/// source order and the mean is normalized again. Amplitude-only data is
/// accepted by the direct strategy only.
pub fn estimate_transfer_function(
    sources: &Sources,
    strategy: Strategy,
    smoothing: Option<SmoothingParams>,
) -> Result<TransferFunction> {
    let (h, w) = sources.dims()?;
    let smoothing = smoothing.unwrap_or_else(|| SmoothingParams::for_dims(h, w));
    match (sources, strategy) {
        (_, Strategy::Known) => Err(Error::Unsupported("a known response is supplied, not estimated".into())),
        (Sources::Amplitude(_), Strategy::Gaussian | Strategy::RaisedCosine) => Err(Error::Unsupported(format!(
            "{strategy} fitting needs complex data; amplitude spectra lack the high-frequency content \
                 the fit relies on and it does not converge. Use the direct strategy."
        ))),
        (Sources::Amplitude(img), Strategy::Direct) => {
            let (values, _) = estimate_single(&magnitude_spectrum_amplitude(img), strategy, smoothing)?;
            TransferFunction::from_plane(values, strategy, Vec::new())
        }
        (Sources::Complex(list), _) => {
            let per_source: Vec<(Array2<f64>, Option<FitParams>)> = list
                .iter()
                .map(|img| estimate_single(&magnitude_spectrum(img), strategy, smoothing))
                .collect::<Result<_>>()?;
            let mut sum = Array2::zeros((h, w));
            for (values, _) in &per_source {
                sum += values;
            }
            sum /= per_source.len() as f64;
            let fits = per_source.into_iter().filter_map(|(_, f)| f).collect();
            TransferFunction::from_plane(sum, strategy, fits)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc(a: f64, b: f64, fc: f64) -> RaisedCosineAxis {
        RaisedCosineAxis { a, b, cutoff: fc }
    }

    #[test]
    fn raised_cosine_endpoints() {
        let ax = rc(0.6, 0.4, 30.0);
        assert!((ax.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((ax.eval(30.0) - 0.2).abs() < 1e-15);
        assert!((ax.eval(-30.0) - 0.2).abs() < 1e-15);
        assert_eq!(ax.eval(30.01), 0.0);
    }

    #[test]
    fn gaussian_peak_is_gain() {
        let g = GaussianAxis {
            gain: 0.7,
            mean: 3.0,
            std: 5.0,
        };
        assert_eq!(g.eval(3.0), 0.7);
    }

    #[test]
    fn smoothing_defaults_scale() {
        assert_eq!(SmoothingParams::for_dims(1024, 1024), SmoothingParams::default());
        assert_eq!(SmoothingParams::for_dims(2048, 1024), SmoothingParams::default());
        let s = SmoothingParams::for_dims(512, 512);
        assert_eq!(s.kernel_size, 301);
        assert!((s.sigma - 301.0 / 6.01).abs() < 1e-12);
        assert_eq!(SmoothingParams::for_dims(8, 8).kernel_size, 5);
        assert_eq!(SmoothingParams::for_dims(10, 10).kernel_size, 7);
    }

    #[test]
    fn known_requires_valid_response() {
        let mut v = Array2::ones((4, 4));
        assert!(TransferFunction::known(v.clone()).is_ok());
        v[(0, 1)] = 0.5;
        assert!(TransferFunction::known(v.clone()).is_err());
        let v = Array2::from_elem((4, 4), 0.5);
        assert!(TransferFunction::known(v).is_err());
    }

    #[test]
    fn direct_rejects_zero_input() {
        assert!(matches!(
            estimate_direct(&Array2::zeros((4, 4))),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fit_requires_unit_energy() {
        let p = Array2::from_elem((8, 8), 1.0);
        assert!(fit_gaussian(&p).is_err());
        assert!(fit_raised_cosine(&p).is_err());
    }

    #[test]
    fn amplitude_only_rejects_curve_fits() {
        let a = AmplitudeImage::filled(8, 8, 1.0).unwrap();
        let s = Sources::Amplitude(a);
        for st in [Strategy::Gaussian, Strategy::RaisedCosine] {
            assert!(matches!(
                estimate_transfer_function(&s, st, None),
                Err(Error::Unsupported(_))
            ));
        }
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let s = Sources::Complex(vec![
            ComplexImage::zeros(8, 8).unwrap(),
            ComplexImage::zeros(8, 9).unwrap(),
        ]);
        assert!(matches!(
            estimate_transfer_function(&s, Strategy::Direct, None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(estimate_transfer_function(&Sources::Complex(vec![]), Strategy::Direct, None).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("raised-cosine".parse::<Strategy>().unwrap(), Strategy::RaisedCosine);
        assert_eq!(Strategy::RaisedCosine.to_string(), "raised-cosine");
        assert!("cubic".parse::<Strategy>().is_err());
    }

    #[test]
    fn sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let params = RaisedCosineFitParams {
            x: rc(0.5, 0.5, 5.0),
            y: rc(0.5, 0.5, 4.0),
        };
        let tf = raised_cosine_transfer_function(&params, 16, 12).unwrap();
        let path = dir.path().join("h.sarf");
        tf.write(&path).unwrap();
        let back = TransferFunction::read(&path).unwrap();
        assert_eq!(back, tf);
    }
}
