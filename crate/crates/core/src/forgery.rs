//! Splicing forgeries on amplitude images.
//!
//! A donor image is optionally edited (blur, resize or rotation with the
//! parameter ranges below), then a region of the edited donor is copied onto
//! a congruent region of the target. The tampering mask is 1 exactly on the
//! target region.
//!
//! | edit            | parameter                   |
//! |-----------------|-----------------------------|
//! | gaussian blur   | sigma = 0.5                 |
//! | upscale near    | factor ~ U[1.05, 1.5)       |
//! | upscale far     | factor ~ U[1.5, 2]          |
//! | downscale near  | factor ~ U[0.65, 0.95]      |
//! | downscale far   | factor ~ U[0.5, 0.65)       |
//! | rotate near     | angle ~ U[5, 15) degrees    |
//! | rotate far      | angle ~ U[15, 45] degrees   |

use ndarray::{s, Array2};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{max_for_bits, AmplitudeImage, TamperMask};
use crate::resample;
use crate::rng::{streams, unit_f64, StreamKey};

pub const BLUR_SIGMA: f64 = 0.5;
pub const UPSCALE_NEAR: (f64, f64) = (1.05, 1.5);
pub const UPSCALE_FAR: (f64, f64) = (1.5, 2.0);
pub const DOWNSCALE_NEAR: (f64, f64) = (0.65, 0.95);
pub const DOWNSCALE_FAR: (f64, f64) = (0.5, 0.65);
pub const ROTATE_NEAR: (f64, f64) = (5.0, 15.0);
pub const ROTATE_FAR: (f64, f64) = (15.0, 45.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    None,
    GaussianBlur,
    Upscale,
    Downscale,
    Rotate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeClass {
    Near,
    Far,
    Fixed,
}

/// A donor edit. `parameter` is required for [`RangeClass::Fixed`] resize
/// and rotate edits and ignored otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub range_class: RangeClass,
    #[serde(default)]
    pub parameter: Option<f64>,
}

/// An edit with its parameter drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedEdit {
    pub kind: EditKind,
    pub range_class: RangeClass,
    /// sigma, resize factor or angle in degrees; `None` for no edit.
    pub parameter: Option<f64>,
}

impl EditOp {
    pub const NONE: EditOp = EditOp {
        kind: EditKind::None,
        range_class: RangeClass::Fixed,
        parameter: None,
    };

    pub fn new(kind: EditKind, range_class: RangeClass) -> Self {
        Self {
            kind,
            range_class,
            parameter: None,
        }
    }

    pub fn fixed(kind: EditKind, parameter: f64) -> Self {
        Self {
            kind,
            range_class: RangeClass::Fixed,
            parameter: Some(parameter),
        }
    }

    /// Parses `gaussian-blur`, `upscale-near`, `rotate-far`, `none`, ...
    pub fn from_name(name: &str) -> Result<Self> {
        let (kind, class) = match name.replace('_', "-").as_str() {
            "none" => return Ok(Self::NONE),
            "gaussian-blur" | "blur" => (EditKind::GaussianBlur, RangeClass::Fixed),
            "upscale-near" => (EditKind::Upscale, RangeClass::Near),
            "upscale-far" => (EditKind::Upscale, RangeClass::Far),
            "downscale-near" => (EditKind::Downscale, RangeClass::Near),
            "downscale-far" => (EditKind::Downscale, RangeClass::Far),
            "rotate-near" => (EditKind::Rotate, RangeClass::Near),
            "rotate-far" => (EditKind::Rotate, RangeClass::Far),
            other => return Err(Error::InvalidParameter(format!("edit '{other}'"))),
        };
        Ok(Self::new(kind, class))
    }

    /// Combines a base edit name (`upscale`, `rotate`, ...) with a range class.
    pub fn from_parts(kind: &str, class: Option<&str>) -> Result<Self> {
        match class {
            Some(c) if kind != "none" && kind != "gaussian-blur" && kind != "blur" => {
                Self::from_name(&format!("{kind}-{c}"))
            }
            _ => Self::from_name(kind),
        }
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            EditKind::None => return "none".into(),
            EditKind::GaussianBlur => return "gaussian-blur".into(),
            EditKind::Upscale => "upscale",
            EditKind::Downscale => "downscale",
            EditKind::Rotate => "rotate",
        };
        match self.range_class {
            RangeClass::Near => format!("{base}-near"),
            RangeClass::Far => format!("{base}-far"),
            RangeClass::Fixed => format!("{base}-fixed"),
        }
    }

    /// Sampling interval for this edit, if it is drawn at random.
    pub fn range(&self) -> Option<(f64, f64)> {
        match (self.kind, self.range_class) {
            (EditKind::Upscale, RangeClass::Near) => Some(UPSCALE_NEAR),
            (EditKind::Upscale, RangeClass::Far) => Some(UPSCALE_FAR),
            (EditKind::Downscale, RangeClass::Near) => Some(DOWNSCALE_NEAR),
            (EditKind::Downscale, RangeClass::Far) => Some(DOWNSCALE_FAR),
            (EditKind::Rotate, RangeClass::Near) => Some(ROTATE_NEAR),
            (EditKind::Rotate, RangeClass::Far) => Some(ROTATE_FAR),
            _ => None,
        }
    }

    /// Draws the edit parameter.
    pub fn resolve(&self, rng: &mut impl RngCore) -> Result<AppliedEdit> {
        let parameter =
            match self.kind {
                EditKind::None => None,
                EditKind::GaussianBlur => Some(self.parameter.unwrap_or(BLUR_SIGMA)),
                _ => match self.range() {
                    Some((lo, hi)) => Some(lo + (hi - lo) * unit_f64(rng)),
                    None => Some(self.parameter.ok_or_else(|| {
                        Error::InvalidParameter(format!("{} needs an explicit parameter", self.name()))
                    })?),
                },
            };
        if let Some(p) = parameter {
            let bad = match self.kind {
                EditKind::Upscale | EditKind::Downscale | EditKind::GaussianBlur => !(p > 0.0),
                _ => !p.is_finite(),
            };
            if bad {
                return Err(Error::InvalidParameter(format!(
                    "{} parameter {p} is degenerate",
                    self.name()
                )));
            }
        }
        Ok(AppliedEdit {
            kind: self.kind,
            range_class: self.range_class,
            parameter,
        })
    }
}

/// The seven donor edits evaluated per image.
pub fn local_edits() -> Vec<EditOp> {
    [
        "gaussian-blur",
        "upscale-near",
        "upscale-far",
        "downscale-near",
        "downscale-far",
        "rotate-near",
        "rotate-far",
    ]
    .iter()
    .map(|n| EditOp::from_name(n).unwrap())
    .collect()
}

/// Edited donor plus the stencil of pixels that carry donor content.
#[derive(Debug, Clone, PartialEq)]
pub struct EditedDonor {
    pub image: AmplitudeImage,
    pub valid: Array2<u8>,
    pub edit: AppliedEdit,
}

/// Applies an already-resolved edit.
pub fn apply_edit(donor: &AmplitudeImage, edit: &AppliedEdit) -> Result<EditedDonor> {
    let bits = donor.dynamic_range_bits();
    let values = donor.values();
    let (plane, valid) = match (edit.kind, edit.parameter) {
        (EditKind::None, _) => (values.clone(), Array2::ones(donor.dim())),
        (EditKind::GaussianBlur, Some(sigma)) => (resample::gaussian_blur(values, sigma), Array2::ones(donor.dim())),
        (EditKind::Upscale | EditKind::Downscale, Some(factor)) => {
            if !(factor > 0.0) {
                return Err(Error::InvalidParameter(format!("resize factor {factor}")));
            }
            let (h, w) = resample::scaled_dims(donor.dim(), factor);
            (resample::resize(values, h, w), Array2::ones((h, w)))
        }
        (EditKind::Rotate, Some(angle)) => (
            resample::rotate(values, angle),
            resample::rotate_stencil(&Array2::ones(donor.dim()), angle),
        ),
        (kind, None) => return Err(Error::InvalidParameter(format!("{kind:?} edit without parameter"))),
    };
    Ok(EditedDonor {
        image: AmplitudeImage::clamped(plane, bits)?,
        valid,
        edit: *edit,
    })
}

/// Draws the edit parameter from `seed` and applies it.
pub fn edit_donor(donor: &AmplitudeImage, op: &EditOp, seed: u64) -> Result<AmplitudeImage> {
    if op.kind == EditKind::None {
        return Ok(donor.clone());
    }
    let edit = op.resolve(&mut StreamKey::new(seed, streams::EDIT_PARAMS).rng())?;
    Ok(apply_edit(donor, &edit)?.image)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionShape {
    Rect {
        height: usize,
        width: usize,
    },
    /// Arbitrary binary stencil; its bounding box is anchored at the origins.
    Stencil(Array2<u8>),
}

impl RegionShape {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            RegionShape::Rect { height, width } => (*height, *width),
            RegionShape::Stencil(s) => s.dim(),
        }
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        match self {
            RegionShape::Rect { .. } => true,
            RegionShape::Stencil(s) => s[(r, c)] == 1,
        }
    }

    pub fn area(&self) -> usize {
        match self {
            RegionShape::Rect { height, width } => height * width,
            RegionShape::Stencil(s) => s.iter().filter(|&&v| v == 1).count(),
        }
    }
}

/// Donor region `D` in the edited donor and target region `T`, congruent by
/// construction: both use the same shape at different origins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpliceSpec {
    /// `(row, col)` of the shape's bounding box in the edited donor.
    pub donor_origin: (usize, usize),
    /// `(row, col)` of the shape's bounding box in the target.
    pub target_origin: (usize, usize),
    pub shape: RegionShape,
}

fn check_inside(origin: (usize, usize), size: (usize, usize), dim: (usize, usize), what: &str) -> Result<()> {
    if size.0 == 0 || size.1 == 0 || origin.0 + size.0 > dim.0 || origin.1 + size.1 > dim.1 {
        return Err(Error::InvalidParameter(format!(
            "{what} region {}x{} at {:?} does not fit in {}x{}",
            size.0, size.1, origin, dim.0, dim.1
        )));
    }
    Ok(())
}

/// Copies `D` onto `T` and returns the spliced image and its mask.
pub fn splice(
    target: &AmplitudeImage,
    edited_donor: &AmplitudeImage,
    spec: &SpliceSpec,
) -> Result<(AmplitudeImage, TamperMask)> {
    let size = spec.shape.dim();
    if let RegionShape::Stencil(st) = &spec.shape {
        if st.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("stencil is not binary".into()));
        }
    }
    check_inside(spec.donor_origin, size, edited_donor.dim(), "donor")?;
    check_inside(spec.target_origin, size, target.dim(), "target")?;
    let mut out = target.values().clone();
    let mut mask = Array2::<u8>::zeros(target.dim());
    let donor = edited_donor.values();
    let (dr, dc) = spec.donor_origin;
    let (tr, tc) = spec.target_origin;
    for r in 0..size.0 {
        for c in 0..size.1 {
            if spec.shape.contains(r, c) {
                out[(tr + r, tc + c)] = donor[(dr + r, dc + c)];
                mask[(tr + r, tc + c)] = 1;
            }
        }
    }
    // every pixel comes from one of two valid images
    Ok((
        AmplitudeImage::from_trusted(out, target.dynamic_range_bits()),
        TamperMask::from_trusted(mask),
    ))
}

/// Everything drawn while building a random forgery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub donor_tile: usize,
    pub target_tile: usize,
    pub edit: AppliedEdit,
    pub edit_name: String,
    pub donor_origin: (usize, usize),
    pub target_origin: (usize, usize),
    pub region: (usize, usize),
    pub edited_donor_dim: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct RandomSplice {
    pub spliced: AmplitudeImage,
    pub mask: TamperMask,
    pub provenance: Provenance,
}

const MAX_PLACEMENT_TRIES: usize = 10_000;

fn rects_overlap(a: (usize, usize), b: (usize, usize), size: (usize, usize)) -> bool {
    a.0 < b.0 + size.0 && b.0 < a.0 + size.0 && a.1 < b.1 + size.1 && b.1 < a.1 + size.1
}

/// Donor and target tiles for a random splice: distinct when possible.
fn pick_tiles(count: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<(usize, usize)> {
    if count == 0 {
        return Err(Error::InvalidParameter("no tiles to splice".into()));
    }
    let donor_tile = rng.random_range(0..count);
    let target_tile = if count > 1 {
        let t = rng.random_range(0..count - 1);
        if t >= donor_tile {
            t + 1
        } else {
            t
        }
    } else {
        0
    };
    Ok((donor_tile, target_tile))
}

/// Draws everything a random splice needs without copying any pixels: the
/// tiles, the edit parameter and both origins. [`random_splice`] with the
/// same arguments records the same provenance.
pub fn place_random(tiles: &[AmplitudeImage], region: (usize, usize), edit: &EditOp, seed: u64) -> Result<Provenance> {
    let mut rng = StreamKey::new(seed, streams::SPLICE_DRAWS).rng();
    let (donor_tile, target_tile) = pick_tiles(tiles.len(), &mut rng)?;
    Ok(place(tiles, donor_tile, target_tile, region, None, edit, seed, &mut rng)?.0)
}

/// Picks donor and target tiles of one product, edits the donor and splices
/// a `region`-sized rectangle at uniformly random in-bounds positions. With a
/// single tile, donor and target windows are kept disjoint.
pub fn random_splice(
    tiles: &[AmplitudeImage],
    region: (usize, usize),
    edit: &EditOp,
    seed: u64,
) -> Result<RandomSplice> {
    let mut rng = StreamKey::new(seed, streams::SPLICE_DRAWS).rng();
    let (donor_tile, target_tile) = pick_tiles(tiles.len(), &mut rng)?;
    let placed = place(tiles, donor_tile, target_tile, region, None, edit, seed, &mut rng)?;
    finish(tiles, placed)
}

/// Like [`random_splice`] with the tiles chosen by the caller and,
/// optionally, the target position fixed.
pub fn splice_into(
    tiles: &[AmplitudeImage],
    donor_tile: usize,
    target_tile: usize,
    region: (usize, usize),
    target_origin: Option<(usize, usize)>,
    edit: &EditOp,
    seed: u64,
) -> Result<RandomSplice> {
    if donor_tile >= tiles.len() || target_tile >= tiles.len() {
        return Err(Error::InvalidParameter("tile index out of range".into()));
    }
    let mut rng = StreamKey::new(seed, streams::SPLICE_DRAWS).rng();
    let placed = place(
        tiles,
        donor_tile,
        target_tile,
        region,
        target_origin,
        edit,
        seed,
        &mut rng,
    )?;
    finish(tiles, placed)
}

/// Provenance of a placed splice and the edited donor, when an edit ran.
type Placed = (Provenance, Option<EditedDonor>);

#[allow(clippy::too_many_arguments)]
fn place(
    tiles: &[AmplitudeImage],
    donor_tile: usize,
    target_tile: usize,
    region: (usize, usize),
    fixed_target: Option<(usize, usize)>,
    edit: &EditOp,
    seed: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Placed> {
    let dim = tiles[target_tile].dim();
    if region.0 == 0 || region.1 == 0 || region.0 > dim.0 || region.1 > dim.1 {
        return Err(Error::InvalidParameter(format!(
            "region {}x{} does not fit the target of {}x{}",
            region.0, region.1, dim.0, dim.1
        )));
    }
    if let Some(o) = fixed_target {
        check_inside(o, region, dim, "target")?;
    }

    let applied = edit.resolve(&mut StreamKey::new(seed, streams::EDIT_PARAMS).rng())?;
    let edited = match applied.kind {
        EditKind::None => None,
        _ => Some(apply_edit(&tiles[donor_tile], &applied)?),
    };
    let (donor_image, valid) = match &edited {
        Some(e) => (&e.image, Some(&e.valid)),
        None => (&tiles[donor_tile], None),
    };
    let ed = donor_image.dim();
    if region.0 > ed.0 || region.1 > ed.1 {
        return Err(Error::InvalidParameter(format!(
            "region {}x{} does not fit the edited donor of {}x{}",
            region.0, region.1, ed.0, ed.1
        )));
    }

    let fully_valid = |o: (usize, usize)| {
        valid.is_none_or(|v| {
            v.slice(s![o.0..o.0 + region.0, o.1..o.1 + region.1])
                .iter()
                .all(|&x| x == 1)
        })
    };
    let same_tile = donor_tile == target_tile;
    let mut placed = None;
    for _ in 0..MAX_PLACEMENT_TRIES {
        let donor_origin = (
            rng.random_range(0..=ed.0 - region.0),
            rng.random_range(0..=ed.1 - region.1),
        );
        let target_origin = match fixed_target {
            Some(o) => o,
            None => (
                rng.random_range(0..=dim.0 - region.0),
                rng.random_range(0..=dim.1 - region.1),
            ),
        };
        let clash = same_tile && rects_overlap(donor_origin, target_origin, region);
        if !fully_valid(donor_origin) || clash {
            continue;
        }
        placed = Some((donor_origin, target_origin));
        break;
    }
    let (donor_origin, target_origin) =
        placed.ok_or_else(|| Error::InvalidParameter("could not place donor and target regions".into()))?;

    let provenance = Provenance {
        seed,
        donor_tile,
        target_tile,
        edit: applied,
        edit_name: edit.name(),
        donor_origin,
        target_origin,
        region,
        edited_donor_dim: ed,
    };
    Ok((provenance, edited))
}

fn finish(tiles: &[AmplitudeImage], (provenance, edited): Placed) -> Result<RandomSplice> {
    let donor = edited.as_ref().map_or(&tiles[provenance.donor_tile], |e| &e.image);
    let spec = SpliceSpec {
        donor_origin: provenance.donor_origin,
        target_origin: provenance.target_origin,
        shape: RegionShape::Rect {
            height: provenance.region.0,
            width: provenance.region.1,
        },
    };
    let (spliced, mask) = splice(&tiles[provenance.target_tile], donor, &spec)?;
    Ok(RandomSplice {
        spliced,
        mask,
        provenance,
    })
}

/// Whole-image processing used as an alternative to speckle injection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GlobalEditOp {
    GaussianBlur {
        sigma: f64,
    },
    /// Upscale by `factor`, then back to the original size.
    UpDownScale {
        factor: f64,
    },
    /// Downscale by `1 / factor`, then back to the original size.
    DownUpScale {
        factor: f64,
    },
    AdditiveGaussian {
        std: f64,
    },
    AdditiveLaplacian {
        scale: f64,
    },
    /// Adds `P(lambda) - lambda`.
    AdditivePoisson {
        lambda: f64,
    },
    AdditiveUniform {
        low: f64,
        high: f64,
    },
}

/// `0.0005 * (2^16 - 1)`.
pub const GLOBAL_NOISE_LEVEL: f64 = 0.0005 * 65535.0;

impl GlobalEditOp {
    /// The nine global edits with their default parameters, by name.
    pub fn catalog() -> Vec<(&'static str, GlobalEditOp)> {
        use GlobalEditOp::*;
        vec![
            ("gaussian-blur", GaussianBlur { sigma: 0.5 }),
            ("updownscale-near", UpDownScale { factor: 1.05 }),
            ("downupscale-near", DownUpScale { factor: 1.05 }),
            ("updownscale-far", UpDownScale { factor: 1.5 }),
            ("downupscale-far", DownUpScale { factor: 1.5 }),
            (
                "additive-gaussian",
                AdditiveGaussian {
                    std: GLOBAL_NOISE_LEVEL,
                },
            ),
            (
                "additive-laplacian",
                AdditiveLaplacian {
                    scale: GLOBAL_NOISE_LEVEL,
                },
            ),
            (
                "additive-poisson",
                AdditivePoisson {
                    lambda: GLOBAL_NOISE_LEVEL,
                },
            ),
            ("additive-uniform", AdditiveUniform { low: -50.0, high: 50.0 }),
        ]
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::catalog()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, op)| op)
            .ok_or_else(|| Error::InvalidParameter(format!("global edit '{name}'")))
    }
}

/// Adds per-pixel noise drawn row-major from the global-noise stream.
fn add_noise(plane: &mut Array2<f64>, seed: u64, mut draw: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> f64) {
    let mut rng = StreamKey::new(seed, streams::GLOBAL_NOISE).rng();
    for v in plane.iter_mut() {
        *v += draw(&mut rng);
    }
}

/// Whole-image edit, clipped to `[0, 2^bits - 1]`.
pub fn global_edit(image: &AmplitudeImage, op: &GlobalEditOp, seed: u64) -> Result<AmplitudeImage> {
    let dim = image.dim();
    let mut plane = match *op {
        GlobalEditOp::GaussianBlur { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("blur sigma {sigma}")));
            }
            resample::gaussian_blur(image.values(), sigma)
        }
        GlobalEditOp::UpDownScale { factor } | GlobalEditOp::DownUpScale { factor } => {
            if !(factor > 0.0) {
                return Err(Error::InvalidParameter(format!("resize factor {factor}")));
            }
            let first = if matches!(op, GlobalEditOp::UpDownScale { .. }) {
                factor
            } else {
                1.0 / factor
            };
            let (h, w) = resample::scaled_dims(dim, first);
            let once = resample::resize(image.values(), h, w);
            resample::resize(&once, dim.0, dim.1)
        }
        GlobalEditOp::AdditiveGaussian { std } => {
            let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(format!("gaussian noise: {e}")))?;
            let mut p = image.values().clone();
            add_noise(&mut p, seed, |rng| normal.sample(rng));
            p
        }
        GlobalEditOp::AdditiveLaplacian { scale } => {
            if !(scale > 0.0) {
                return Err(Error::InvalidParameter(format!("laplacian scale {scale}")));
            }
            let mut p = image.values().clone();
            // inverse CDF on u in (-1/2, 1/2)
            add_noise(&mut p, seed, |rng| {
                let u = unit_f64(rng) - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            });
            p
        }
        GlobalEditOp::AdditivePoisson { lambda } => {
            let poisson = Poisson::new(lambda).map_err(|e| Error::InvalidParameter(format!("poisson noise: {e}")))?;
            let mut p = image.values().clone();
            add_noise(&mut p, seed, |rng| poisson.sample(rng) - lambda);
            p
        }
        GlobalEditOp::AdditiveUniform { low, high } => {
            if !(high > low) {
                return Err(Error::InvalidParameter(format!("uniform noise [{low}, {high}]")));
            }
            let mut p = image.values().clone();
            add_noise(&mut p, seed, |rng| low + (high - low) * unit_f64(rng));
            p
        }
    };
    let max = max_for_bits(image.dynamic_range_bits());
    plane.mapv_inplace(|v| v.clamp(0.0, max));
    AmplitudeImage::new(plane, image.dynamic_range_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> AmplitudeImage {
        AmplitudeImage::from_values(Array2::from_shape_fn((h, w), |(r, c)| (r * w + c) as f64)).unwrap()
    }

    #[test]
    fn none_edit_is_identity() {
        let img = ramp(6, 9);
        assert_eq!(edit_donor(&img, &EditOp::NONE, 3).unwrap(), img);
    }

    #[test]
    fn fixed_upscale_doubles() {
        let img = AmplitudeImage::filled(64, 64, 100.0).unwrap();
        let out = edit_donor(&img, &EditOp::fixed(EditKind::Upscale, 2.0), 0).unwrap();
        assert_eq!(out.dim(), (128, 128));
        assert!(out.values().iter().all(|v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn degenerate_factor_rejected() {
        let img = ramp(4, 4);
        assert!(edit_donor(&img, &EditOp::fixed(EditKind::Downscale, 0.0), 0).is_err());
        assert!(edit_donor(&img, &EditOp::fixed(EditKind::Upscale, -1.0), 0).is_err());
        let no_param = EditOp::new(EditKind::Rotate, RangeClass::Fixed);
        assert!(edit_donor(&img, &no_param, 0).is_err());
    }

    #[test]
    fn names_roundtrip() {
        for op in local_edits() {
            assert_eq!(EditOp::from_name(&op.name()).unwrap(), op);
        }
        assert_eq!(
            EditOp::from_parts("rotate", Some("far")).unwrap(),
            EditOp::new(EditKind::Rotate, RangeClass::Far)
        );
        assert_eq!(
            EditOp::from_parts("gaussian-blur", Some("near")).unwrap().kind,
            EditKind::GaussianBlur
        );
        assert!(EditOp::from_name("shear").is_err());
    }

    #[test]
    fn splice_rect_mask_count() {
        let t = AmplitudeImage::filled(256, 256, 1.0).unwrap();
        let d = AmplitudeImage::filled(256, 256, 2.0).unwrap();
        let spec = SpliceSpec {
            donor_origin: (10, 20),
            target_origin: (100, 5),
            shape: RegionShape::Rect {
                height: 128,
                width: 128,
            },
        };
        let (out, mask) = splice(&t, &d, &spec).unwrap();
        assert_eq!(mask.count(), 16384);
        assert_eq!(out.values().iter().filter(|&&v| v == 2.0).count(), 16384);
    }

    #[test]
    fn splice_identical_content_keeps_target() {
        let t = ramp(32, 32);
        let spec = SpliceSpec {
            donor_origin: (4, 4),
            target_origin: (4, 4),
            shape: RegionShape::Rect { height: 8, width: 8 },
        };
        let (out, mask) = splice(&t, &t, &spec).unwrap();
        assert_eq!(out, t);
        assert_eq!(mask.count(), 64);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let t = ramp(16, 16);
        let spec = SpliceSpec {
            donor_origin: (0, 0),
            target_origin: (10, 10),
            shape: RegionShape::Rect { height: 8, width: 8 },
        };
        assert!(splice(&t, &t, &spec).is_err());
    }

    #[test]
    fn stencil_splice() {
        let t = AmplitudeImage::filled(64, 64, 1.0).unwrap();
        let d = AmplitudeImage::filled(64, 64, 5.0).unwrap();
        let stencil = Array2::from_shape_fn((35, 16), |(r, c)| u8::from((r + c) % 3 != 0));
        let area = stencil.iter().filter(|&&v| v == 1).count();
        let spec = SpliceSpec {
            donor_origin: (0, 0),
            target_origin: (20, 40),
            shape: RegionShape::Stencil(stencil),
        };
        let (out, mask) = splice(&t, &d, &spec).unwrap();
        assert_eq!(mask.count(), area);
        for ((r, c), &m) in mask.values().indexed_iter() {
            assert_eq!(out.values()[(r, c)], if m == 1 { 5.0 } else { 1.0 });
        }
    }

    #[test]
    fn random_splice_single_tile_disjoint() {
        let tile = ramp(64, 64);
        let out = random_splice(&[tile], (16, 16), &EditOp::NONE, 5).unwrap();
        let p = &out.provenance;
        assert_eq!(p.donor_tile, 0);
        assert!(!rects_overlap(p.donor_origin, p.target_origin, (16, 16)));
        assert_eq!(out.mask.count(), 256);
    }

    #[test]
    fn random_splice_too_small() {
        let tile = ramp(8, 8);
        assert!(random_splice(&[tile.clone(), tile], (16, 16), &EditOp::NONE, 1).is_err());
    }

    #[test]
    fn updownscale_constant() {
        let img = AmplitudeImage::filled(40, 40, 321.0).unwrap();
        for (_, op) in GlobalEditOp::catalog().into_iter().take(5) {
            let out = global_edit(&img, &op, 0).unwrap();
            assert_eq!(out.dim(), img.dim());
            assert!(out.values().iter().all(|v| (v - 321.0).abs() < 1e-6));
        }
    }

    #[test]
    fn clipping_to_16_bits() {
        let img = AmplitudeImage::filled(8, 8, 0.0).unwrap();
        let op = GlobalEditOp::AdditiveUniform { low: -50.0, high: 50.0 };
        let out = global_edit(&img, &op, 9).unwrap();
        assert!(out.values().iter().all(|&v| (0.0..=50.0).contains(&v)));
        let top = AmplitudeImage::filled(8, 8, 65535.0).unwrap();
        let out = global_edit(&top, &op, 9).unwrap();
        assert!(out.values().iter().all(|&v| v <= 65535.0));
    }

    #[test]
    fn global_edit_catalog() {
        assert_eq!(GlobalEditOp::catalog().len(), 9);
        assert_eq!(
            GlobalEditOp::from_name("additive-uniform").unwrap(),
            GlobalEditOp::AdditiveUniform { low: -50.0, high: 50.0 }
        );
        assert!(GlobalEditOp::from_name("sharpen").is_err());
    }
}
