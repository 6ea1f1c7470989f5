//! Raster types, the `SARF` binary container and product tiling.
//!
//! Rows run along azimuth (height), columns along range (width). All planes
//! are `f64` internally; 16-bit quantization only happens on explicit export.
//!
//! File layout (little-endian):
//!
//! ```text
//! 0..4    magic "SARF"
//! 4       kind (1 = amplitude_f64, 2 = complex_f64, 3 = mask_u8)
//! 5       dynamic range bits
//! 6..16   reserved, zero
//! 16..24  height u64
//! 24..32  width u64
//! 32..    row-major payload; complex rasters store all re, then all im
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array2};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SARF";
pub const HEADER_LEN: usize = 32;
pub const DEFAULT_DYNAMIC_RANGE_BITS: u8 = 16;

fn check_finite(plane: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in plane.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

fn check_nonempty(dim: (usize, usize)) -> Result<()> {
    if dim.0 == 0 || dim.1 == 0 {
        return Err(Error::InvalidParameter(format!(
            "raster must be at least 1x1, got {}x{}",
            dim.0, dim.1
        )));
    }
    Ok(())
}

/// Nonnegative real raster: the released SAR amplitude product.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeImage {
    values: Array2<f64>,
    dynamic_range_bits: u8,
}

impl AmplitudeImage {
    pub fn new(values: Array2<f64>, dynamic_range_bits: u8) -> Result<Self> {
        check_nonempty(values.dim())?;
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if v < 0.0 {
                return Err(Error::NegativeAmplitude { row, col, value: v });
            }
        }
        if dynamic_range_bits == 0 || dynamic_range_bits > 32 {
            return Err(Error::InvalidParameter(format!(
                "dynamic range of {dynamic_range_bits} bits"
            )));
        }
        Ok(Self {
            values,
            dynamic_range_bits,
        })
    }

    /// Skips validation; for values derived from already valid images.
    pub(crate) fn from_trusted(values: Array2<f64>, dynamic_range_bits: u8) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self {
            values,
            dynamic_range_bits,
        }
    }

    /// 16-bit product.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        Self::new(values, DEFAULT_DYNAMIC_RANGE_BITS)
    }

    /// Clamps negatives to zero before validating. Used after interpolation
    /// and filtering steps that can overshoot below zero.
    pub fn clamped(mut values: Array2<f64>, dynamic_range_bits: u8) -> Result<Self> {
        values.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
        Self::new(values, dynamic_range_bits)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::from_values(Array2::from_elem((height, width), value))
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn dynamic_range_bits(&self) -> u8 {
        self.dynamic_range_bits
    }

    /// Largest representable value, `2^bits - 1`.
    pub fn max_value(&self) -> f64 {
        max_for_bits(self.dynamic_range_bits)
    }

    /// Rounds to the nearest integer level. Fails if a value exceeds the
    /// declared dynamic range.
    pub fn quantize(&self) -> Result<Array2<u32>> {
        let max = self.max_value();
        let mut out = Array2::zeros(self.dim());
        for ((row, col), &v) in self.values.indexed_iter() {
            if v > max {
                return Err(Error::InvalidParameter(format!(
                    "value {v} at ({row}, {col}) exceeds {}-bit range",
                    self.dynamic_range_bits
                )));
            }
            out[(row, col)] = v.round() as u32;
        }
        Ok(out)
    }

    /// Treats the amplitude as a zero-phase complex signal.
    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage {
            re: self.values.clone(),
            im: Array2::zeros(self.dim()),
        }
    }
}

pub fn max_for_bits(bits: u8) -> f64 {
    (2f64).powi(bits as i32) - 1.0
}

/// Complex SAR signal stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    re: Array2<f64>,
    im: Array2<f64>,
}

impl ComplexImage {
    pub fn new(re: Array2<f64>, im: Array2<f64>) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::DimensionMismatch {
                expected: re.dim(),
                found: im.dim(),
            });
        }
        check_nonempty(re.dim())?;
        check_finite(&re)?;
        check_finite(&im)?;
        Ok(Self { re, im })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(Array2::zeros((height, width)), Array2::zeros((height, width)))
    }

    pub fn from_complex(plane: &Array2<Complex64>) -> Result<Self> {
        Self::new(plane.mapv(|z| z.re), plane.mapv(|z| z.im))
    }

    pub fn to_complex(&self) -> Array2<Complex64> {
        let mut out = Array2::zeros(self.dim());
        ndarray::Zip::from(&mut out)
            .and(&self.re)
            .and(&self.im)
            .for_each(|o, &r, &i| *o = Complex64::new(r, i));
        out
    }

    pub fn height(&self) -> usize {
        self.re.nrows()
    }

    pub fn width(&self) -> usize {
        self.re.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    pub fn re(&self) -> &Array2<f64> {
        &self.re
    }

    pub fn im(&self) -> &Array2<f64> {
        &self.im
    }

    /// Pixel-wise modulus `|z|`.
    pub fn amplitude(&self, dynamic_range_bits: u8) -> AmplitudeImage {
        let mut values = Array2::zeros(self.dim());
        ndarray::Zip::from(&mut values)
            .and(&self.re)
            .and(&self.im)
            .for_each(|a, &r, &i| *a = r.hypot(i));
        AmplitudeImage {
            values,
            dynamic_range_bits,
        }
    }
}

/// Binary tampering mask: 1 on spliced pixels, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamperMask {
    values: Array2<u8>,
}

impl TamperMask {
    pub fn new(values: Array2<u8>) -> Result<Self> {
        check_nonempty(values.dim())?;
        if let Some(((row, col), v)) = values.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(Error::InvalidParameter(format!(
                "mask value {v} at ({row}, {col}) is not binary"
            )));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_trusted(values: Array2<u8>) -> Self {
        debug_assert!(values.iter().all(|&v| v <= 1));
        Self { values }
    }

    pub fn empty(height: usize, width: usize) -> Result<Self> {
        Self::new(Array2::zeros((height, width)))
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    pub fn is_set(&self, row: usize, col: usize) -> bool {
        self.values[(row, col)] == 1
    }

    /// Number of marked pixels.
    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// Binary PGM (P5, maxval 255) for visual inspection.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        buf.extend(self.values.iter().map(|&v| if v == 1 { 255u8 } else { 0 }));
        fs::write(path, buf)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum RasterKind {
    AmplitudeF64 = 1,
    ComplexF64 = 2,
    MaskU8 = 3,
}

impl RasterKind {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Self::AmplitudeF64),
            2 => Ok(Self::ComplexF64),
            3 => Ok(Self::MaskU8),
            other => Err(Error::MalformedHeader(format!("unknown kind tag {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AmplitudeF64 => "amplitude_f64",
            Self::ComplexF64 => "complex_f64",
            Self::MaskU8 => "mask_u8",
        }
    }

    fn bytes_per_pixel(self) -> usize {
        match self {
            Self::AmplitudeF64 => 8,
            Self::ComplexF64 => 16,
            Self::MaskU8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub kind: RasterKind,
    pub dynamic_range_bits: u8,
    pub height: u64,
    pub width: u64,
}

impl RasterHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = self.kind as u8;
        out[5] = self.dynamic_range_bits;
        out[16..24].copy_from_slice(&self.height.to_le_bytes());
        out[24..32].copy_from_slice(&self.width.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::MalformedHeader(format!(
                "need {HEADER_LEN} header bytes, file has {}",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::MalformedHeader("bad magic".into()));
        }
        let kind = RasterKind::from_tag(bytes[4])?;
        let height = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let width = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        if height == 0 || width == 0 {
            return Err(Error::MalformedHeader(format!("empty raster {height}x{width}")));
        }
        Ok(Self {
            kind,
            dynamic_range_bits: bytes[5],
            height,
            width,
        })
    }

    pub fn payload_len(&self) -> Option<usize> {
        (self.height as usize)
            .checked_mul(self.width as usize)?
            .checked_mul(self.kind.bytes_per_pixel())
    }
}

/// Any raster the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Amplitude(AmplitudeImage),
    Complex(ComplexImage),
    Mask(TamperMask),
}

impl Raster {
    pub fn kind(&self) -> RasterKind {
        match self {
            Raster::Amplitude(_) => RasterKind::AmplitudeF64,
            Raster::Complex(_) => RasterKind::ComplexF64,
            Raster::Mask(_) => RasterKind::MaskU8,
        }
    }
}

impl From<AmplitudeImage> for Raster {
    fn from(v: AmplitudeImage) -> Self {
        Raster::Amplitude(v)
    }
}

impl From<ComplexImage> for Raster {
    fn from(v: ComplexImage) -> Self {
        Raster::Complex(v)
    }
}

impl From<TamperMask> for Raster {
    fn from(v: TamperMask) -> Self {
        Raster::Mask(v)
    }
}

fn push_plane(buf: &mut Vec<u8>, plane: &Array2<f64>) {
    for v in plane.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_raster(raster: &Raster) -> Vec<u8> {
    let (dim, bits) = match raster {
        Raster::Amplitude(a) => (a.dim(), a.dynamic_range_bits()),
        Raster::Complex(c) => (c.dim(), DEFAULT_DYNAMIC_RANGE_BITS),
        Raster::Mask(m) => (m.dim(), 1),
    };
    let header = RasterHeader {
        kind: raster.kind(),
        dynamic_range_bits: bits,
        height: dim.0 as u64,
        width: dim.1 as u64,
    };
    let mut buf = Vec::with_capacity(HEADER_LEN + header.payload_len().unwrap_or(0));
    buf.extend_from_slice(&header.encode());
    match raster {
        Raster::Amplitude(a) => push_plane(&mut buf, a.values()),
        Raster::Complex(c) => {
            push_plane(&mut buf, c.re());
            push_plane(&mut buf, c.im());
        }
        Raster::Mask(m) => buf.extend(m.values().iter().copied()),
    }
    buf
}

fn read_plane(bytes: &[u8], dim: (usize, usize)) -> Array2<f64> {
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec(dim, values).expect("payload length checked against header")
}

pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    let header = RasterHeader::decode(bytes)?;
    let expected = header
        .payload_len()
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            actual: payload.len(),
        });
    }
    let dim = (header.height as usize, header.width as usize);
    let n = dim.0 * dim.1;
    Ok(match header.kind {
        RasterKind::AmplitudeF64 => Raster::Amplitude(AmplitudeImage::new(
            read_plane(payload, dim),
            header.dynamic_range_bits,
        )?),
        RasterKind::ComplexF64 => Raster::Complex(ComplexImage::new(
            read_plane(&payload[..n * 8], dim),
            read_plane(&payload[n * 8..], dim),
        )?),
        RasterKind::MaskU8 => Raster::Mask(TamperMask::new(Array2::from_shape_vec(dim, payload.to_vec()).unwrap())?),
    })
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_raster(raster))?;
    Ok(())
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    decode_raster(&fs::read(path)?)
}

pub fn read_amplitude(path: impl AsRef<Path>) -> Result<AmplitudeImage> {
    let path = path.as_ref();
    match read_raster(path)? {
        Raster::Amplitude(a) => Ok(a),
        other => Err(kind_mismatch(path, "amplitude_f64", &other)),
    }
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let path = path.as_ref();
    match read_raster(path)? {
        Raster::Complex(c) => Ok(c),
        other => Err(kind_mismatch(path, "complex_f64", &other)),
    }
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<TamperMask> {
    let path = path.as_ref();
    match read_raster(path)? {
        Raster::Mask(m) => Ok(m),
        other => Err(kind_mismatch(path, "mask_u8", &other)),
    }
}

fn kind_mismatch(path: &Path, expected: &'static str, found: &Raster) -> Error {
    Error::KindMismatch {
        path: path.to_path_buf(),
        expected,
        found: found.kind().name(),
    }
}

/// Rasters that can be cut into rectangular windows.
pub trait Crop: Sized {
    fn dim(&self) -> (usize, usize);
    /// Caller guarantees the window is in bounds.
    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Self;
}

impl Crop for AmplitudeImage {
    fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            values: self.values.slice(s![row..row + height, col..col + width]).to_owned(),
            dynamic_range_bits: self.dynamic_range_bits,
        }
    }
}

impl Crop for ComplexImage {
    fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Self {
        let window = s![row..row + height, col..col + width];
        Self {
            re: self.re.slice(window).to_owned(),
            im: self.im.slice(window).to_owned(),
        }
    }
}

impl Crop for TamperMask {
    fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Self {
        Self {
            values: self.values.slice(s![row..row + height, col..col + width]).to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile<T> {
    pub image: T,
    pub row_offset: usize,
    pub col_offset: usize,
}

/// Offsets along one axis for a window of `size` moved by `size - overlap`.
/// A trailing remainder shorter than `size` is dropped.
pub fn axis_offsets(dim: usize, size: usize, overlap: usize) -> Result<Vec<usize>> {
    if size == 0 || overlap >= size {
        return Err(Error::InvalidParameter(format!(
            "tile size {size} with overlap {overlap}"
        )));
    }
    if size > dim {
        return Err(Error::InvalidParameter(format!(
            "tile size {size} exceeds image dimension {dim}"
        )));
    }
    let stride = size - overlap;
    let count = (dim - size) / stride + 1;
    Ok((0..count).map(|i| i * stride).collect())
}

/// Cuts `image` into `size`x`size` tiles overlapping by `overlap`, row-major.
pub fn tile<T: Crop>(image: &T, size: usize, overlap: usize) -> Result<Vec<Tile<T>>> {
    let (h, w) = image.dim();
    let rows = axis_offsets(h, size, overlap)?;
    let cols = axis_offsets(w, size, overlap)?;
    let mut tiles = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            tiles.push(Tile {
                image: image.crop(r, c, size, size),
                row_offset: r,
                col_offset: c,
            });
        }
    }
    Ok(tiles)
}
