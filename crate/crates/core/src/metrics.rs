//! Full-reference quality metrics and pixel-level detection scores.

use std::io::Write;

use ndarray::{s, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{decode_raster, AmplitudeImage, Raster, TamperMask};
use crate::spectral::gaussian_taps;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
/// `2^16 - 1`.
pub const DEFAULT_DYNAMIC_RANGE: f64 = 65535.0;

/// Valid-mode separable filtering with the SSIM window.
fn filter_valid(plane: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let k = taps.len();
    let (h, w) = plane.dim();
    let mut rows = Array2::zeros((h, w + 1 - k));
    Zip::from(rows.rows_mut()).and(plane.rows()).for_each(|mut out, src| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = taps.iter().zip(src.slice(s![j..j + k])).map(|(t, v)| t * v).sum();
        }
    });
    let mut out = Array2::zeros((h + 1 - k, w + 1 - k));
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        for (t, src) in taps.iter().zip(rows.slice(s![i..i + k, ..]).rows()) {
            row.scaled_add(*t, &src);
        }
    }
    out
}

/// Per-window luminance and contrast-structure terms.
struct SsimMaps {
    luminance: Array2<f64>,
    cs: Array2<f64>,
}

fn ssim_maps(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> SsimMaps {
    let taps = gaussian_taps(SSIM_SIGMA, SSIM_WINDOW);
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let mu_a = filter_valid(a, &taps);
    let mu_b = filter_valid(b, &taps);
    let aa = filter_valid(&(a * a), &taps);
    let bb = filter_valid(&(b * b), &taps);
    let ab = filter_valid(&(a * b), &taps);
    let mut luminance = Array2::zeros(mu_a.dim());
    let mut cs = Array2::zeros(mu_a.dim());
    Zip::from(&mut luminance)
        .and(&mu_a)
        .and(&mu_b)
        .for_each(|l, &ma, &mb| *l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1));
    Zip::from(&mut cs)
        .and(&mu_a)
        .and(&mu_b)
        .and(&aa)
        .and(&bb)
        .and(&ab)
        .for_each(|c, &ma, &mb, &eaa, &ebb, &eab| {
            let va = eaa - ma * ma;
            let vb = ebb - mb * mb;
            let cov = eab - ma * mb;
            *c = (2.0 * cov + c2) / (va + vb + c2);
        });
    SsimMaps { luminance, cs }
}

fn mean(plane: &Array2<f64>) -> f64 {
    plane.sum() / plane.len() as f64
}

fn check_pair(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if !(dynamic_range > 0.0) {
        return Err(Error::InvalidParameter(format!("dynamic range {dynamic_range}")));
    }
    let (h, w) = a.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "{h}x{w} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    Ok(())
}

pub fn ssim_planes(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> Result<f64> {
    check_pair(a, b, dynamic_range)?;
    let maps = ssim_maps(a, b, dynamic_range);
    Ok(mean(&(&maps.luminance * &maps.cs)))
}

/// Mean SSIM over all fully contained windows.
pub fn ssim(a: &AmplitudeImage, b: &AmplitudeImage, dynamic_range: f64) -> Result<f64> {
    ssim_planes(a.values(), b.values(), dynamic_range)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsSsim {
    pub value: f64,
    /// Scales used; fewer than five for small inputs.
    pub scales: usize,
}

/// 2x2 box average followed by decimation; an odd trailing row or column is dropped.
fn downsample(plane: &Array2<f64>) -> Array2<f64> {
    let (h, w) = (plane.nrows() / 2, plane.ncols() / 2);
    Array2::from_shape_fn((h, w), |(r, c)| {
        0.25 * (plane[(2 * r, 2 * c)]
            + plane[(2 * r, 2 * c + 1)]
            + plane[(2 * r + 1, 2 * c)]
            + plane[(2 * r + 1, 2 * c + 1)])
    })
}

/// Largest number of scales (at most 5) whose coarsest level still fits a window.
pub fn ms_ssim_scales(height: usize, width: usize) -> usize {
    let mut side = height.min(width);
    let mut scales = 0;
    while scales < MS_SSIM_WEIGHTS.len() && side >= SSIM_WINDOW {
        scales += 1;
        side /= 2;
    }
    scales
}

/// Weights for the first `scales` levels, renormalized to sum to 1. The
/// published five weights sum to 1.0001.
pub fn ms_ssim_exponents(scales: usize) -> Vec<f64> {
    let used = &MS_SSIM_WEIGHTS[..scales.min(MS_SSIM_WEIGHTS.len())];
    let total: f64 = used.iter().sum();
    used.iter().map(|w| w / total).collect()
}

pub fn ms_ssim_planes(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> Result<MsSsim> {
    check_pair(a, b, dynamic_range)?;
    let scales = ms_ssim_scales(a.nrows(), a.ncols());
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut value = 1.0;
    for (j, weight) in ms_ssim_exponents(scales).into_iter().enumerate() {
        let maps = ssim_maps(&a, &b, dynamic_range);
        let term = if j + 1 == scales {
            mean(&(&maps.luminance * &maps.cs))
        } else {
            mean(&maps.cs)
        };
        value *= term.max(0.0).powf(weight);
        if j + 1 < scales {
            a = downsample(&a);
            b = downsample(&b);
        }
    }
    Ok(MsSsim { value, scales })
}

pub fn ms_ssim(a: &AmplitudeImage, b: &AmplitudeImage, dynamic_range: f64) -> Result<MsSsim> {
    ms_ssim_planes(a.values(), b.values(), dynamic_range)
}

/// `mean^2 / variance` of the amplitude values inside `region` (population variance).
pub fn enl(image: &AmplitudeImage, region: Option<&TamperMask>) -> Result<f64> {
    let values = image.values();
    if let Some(m) = region {
        if m.dim() != image.dim() {
            return Err(Error::DimensionMismatch {
                expected: image.dim(),
                found: m.dim(),
            });
        }
    }
    let selected: Vec<f64> = match region {
        None => values.iter().copied().collect(),
        Some(m) => values
            .iter()
            .zip(m.values().iter())
            .filter(|(_, &k)| k == 1)
            .map(|(&v, _)| v)
            .collect(),
    };
    if selected.len() < 2 {
        return Err(Error::Degenerate(format!("ENL region has {} pixel(s)", selected.len())));
    }
    let n = selected.len() as f64;
    let mu = selected.iter().sum::<f64>() / n;
    let var = selected.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Degenerate("ENL region has zero variance".into()));
    }
    Ok(mu * mu / var)
}

/// `|ENL(attacked) - ENL(pristine)| / ENL(pristine)` in percent.
pub fn delta_enl(attacked: &AmplitudeImage, pristine: &AmplitudeImage, region: Option<&TamperMask>) -> Result<f64> {
    let a = enl(attacked, region)?;
    let p = enl(pristine, region)?;
    Ok(100.0 * (a - p).abs() / p)
}

/// Per-pixel detector scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintMap {
    values: Array2<f64>,
}

impl FingerprintMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Reads an amplitude raster, or the real plane of a complex raster.
    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        match decode_raster(&std::fs::read(path)?)? {
            Raster::Amplitude(a) => Self::new(a.into_values()),
            Raster::Complex(c) => Self::new(c.re().clone()),
            Raster::Mask(m) => Self::new(m.values().mapv(f64::from)),
        }
    }
}

/// Produces a fingerprint map for an image. Detectors are external; this
/// crate ships none.
pub trait Detector: Sync {
    fn name(&self) -> &str;
    fn fingerprint(&self, image: &AmplitudeImage) -> Result<FingerprintMap>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auc {
    /// Higher scores taken to mean tampered.
    pub raw: f64,
    /// `max(raw, 1 - raw)`.
    pub max_polarity: f64,
    pub polarity: Polarity,
}

/// Mann-Whitney AUC with midranks for ties.
pub fn auc_roc(fingerprint: &FingerprintMap, mask: &TamperMask) -> Result<Auc> {
    if fingerprint.dim() != mask.dim() {
        return Err(Error::DimensionMismatch {
            expected: mask.dim(),
            found: fingerprint.dim(),
        });
    }
    let scores: Vec<f64> = fingerprint.values.iter().copied().collect();
    let labels: Vec<u8> = mask.values().iter().copied().collect();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate("mask holds a single class".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of 1-based midranks of the positives, kept doubled to stay integral
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        rank_sum_x2 += pos_in_group * (i + 1 + j + 1) as u128;
        i = j + 1;
    }
    let (p, n) = (positives as u128, negatives as u128);
    let u_x2 = rank_sum_x2 - p * (p + 1);
    let raw = u_x2 as f64 / (2 * p * n) as f64;
    let (max_polarity, polarity) = if raw >= 0.5 {
        (raw, Polarity::Positive)
    } else {
        (1.0 - raw, Polarity::Negative)
    };
    Ok(Auc {
        raw,
        max_polarity,
        polarity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ssim: f64,
    pub msssim: f64,
    pub msssim_scales: usize,
    pub enl_source: f64,
    pub enl_reference: f64,
    /// Percent.
    pub delta_enl_pct: f64,
    pub dynamic_range: f64,
    pub auc: Option<Auc>,
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Quality of `source` against `reference`, plus AUC when a fingerprint and
/// mask are supplied.
pub fn evaluate(
    source: &AmplitudeImage,
    reference: &AmplitudeImage,
    region: Option<&TamperMask>,
    detection: Option<(&FingerprintMap, &TamperMask)>,
    dynamic_range: f64,
) -> Result<MetricReport> {
    let ms = ms_ssim(source, reference, dynamic_range)?;
    let enl_source = enl(source, region)?;
    let enl_reference = enl(reference, region)?;
    Ok(MetricReport {
        ssim: ssim(source, reference, dynamic_range)?,
        msssim: ms.value,
        msssim_scales: ms.scales,
        enl_source,
        enl_reference,
        delta_enl_pct: 100.0 * (enl_source - enl_reference).abs() / enl_reference,
        dynamic_range,
        auc: detection.map(|(f, m)| auc_roc(f, m)).transpose()?,
    })
}

/// One line of a batch metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub id: String,
    pub ssim: f64,
    pub msssim: f64,
    pub enl_a: f64,
    pub enl_b: f64,
    pub delta_enl_pct: f64,
    pub auc: Option<f64>,
}

impl BatchRow {
    pub fn from_report(id: impl Into<String>, report: &MetricReport) -> Self {
        Self {
            id: id.into(),
            ssim: report.ssim,
            msssim: report.msssim,
            enl_a: report.enl_source,
            enl_b: report.enl_reference,
            delta_enl_pct: report.delta_enl_pct,
            auc: report.auc.map(|a| a.max_polarity),
        }
    }
}

pub const BATCH_HEADER: [&str; 7] = ["id", "ssim", "msssim", "enl_a", "enl_b", "delta_enl_pct", "auc"];

/// Writes `header` and then one line per row, so an empty table still has
/// its header.
pub(crate) fn write_csv<W: Write, T: Serialize>(out: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `id,ssim,msssim,enl_a,enl_b,delta_enl_pct,auc` rows; missing AUC is blank.
pub fn write_batch_csv<W: Write>(out: W, rows: &[BatchRow]) -> Result<()> {
    write_csv(out, &BATCH_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_averages() {
        let p = Array2::from_shape_fn((4, 5), |(r, c)| (r * 5 + c) as f64);
        let d = downsample(&p);
        assert_eq!(d.dim(), (2, 2));
        assert_eq!(d[(0, 0)], 3.0);
    }

    #[test]
    fn scale_counts() {
        assert_eq!(ms_ssim_scales(176, 200), 5);
        assert_eq!(ms_ssim_scales(175, 200), 4);
        assert_eq!(ms_ssim_scales(11, 11), 1);
        assert_eq!(ms_ssim_scales(10, 40), 0);
    }

    #[test]
    fn weights_sum_to_one() {
        for scales in 1..=5 {
            assert!((ms_ssim_exponents(scales).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_image_rejected() {
        let a = AmplitudeImage::filled(8, 30, 1.0).unwrap();
        assert!(ssim(&a, &a, 255.0).is_err());
        assert!(ms_ssim(&a, &a, 255.0).is_err());
    }

    #[test]
    fn enl_constant_degenerate() {
        let a = AmplitudeImage::filled(8, 8, 3.0).unwrap();
        assert!(matches!(enl(&a, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn auc_single_class() {
        let f = FingerprintMap::new(Array2::zeros((4, 4))).unwrap();
        assert!(auc_roc(&f, &TamperMask::empty(4, 4).unwrap()).is_err());
    }

    #[test]
    fn auc_all_ties_is_half() {
        let f = FingerprintMap::new(Array2::zeros((4, 4))).unwrap();
        let mut m = Array2::zeros((4, 4));
        m[(0, 0)] = 1;
        assert_eq!(auc_roc(&f, &TamperMask::new(m).unwrap()).unwrap().raw, 0.5);
    }

    #[test]
    fn batch_csv_blank_auc() {
        let rows = vec![BatchRow {
            id: "a".into(),
            ssim: 1.0,
            msssim: 1.0,
            enl_a: 2.0,
            enl_b: 2.0,
            delta_enl_pct: 0.0,
            auc: None,
        }];
        let mut buf = Vec::new();
        write_batch_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,ssim,msssim,enl_a,enl_b,delta_enl_pct,auc\na,1.0,1.0,2.0,2.0,0.0,\n"
        );
    }
}
