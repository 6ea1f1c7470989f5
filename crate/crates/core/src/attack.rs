//! The counter-forensic pipeline: despeckle hook, speckle injection, system
//! re-acquisition and histogram matching.
//!
//! ```text
//! I ──despeckle──▶ I_D ──⊙ S e^{jΦ_S}──▶ Ī_S ──F⁻¹(F(·)⊙H)──▶ |·| = Ī_H ──match(·, I)──▶ Ĩ
//! ```

use ndarray::{Array2, Zip};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{AmplitudeImage, ComplexImage};
use crate::speckle::{generate_speckle, inject_speckle, SpeckleMode, DEFAULT_SIGMA_S};
use crate::spectral::{forward_dft_complex, inverse_dft, Spectrum};
use crate::sysid::{estimate_transfer_function, SmoothingParams, Sources, Strategy, TransferFunction};

/// `F⁻¹(F(signal) ⊙ response)` with circular boundary handling. The response
/// is taken as given; see [`apply_system`] for the validated form.
pub fn apply_response(signal: &ComplexImage, response: &Array2<f64>) -> Result<ComplexImage> {
    if signal.dim() != response.dim() {
        return Err(Error::DimensionMismatch {
            expected: signal.dim(),
            found: response.dim(),
        });
    }
    let mut spectrum = forward_dft_complex(signal).into_values();
    Zip::from(&mut spectrum).and(response).for_each(|z, &h| *z *= h);
    inverse_dft(&Spectrum::from_centered(spectrum))
}

pub fn apply_system(signal: &ComplexImage, h: &TransferFunction) -> Result<ComplexImage> {
    apply_response(signal, h.values())
}

/// Rank mapping: the k-th smallest source pixel (ties in row-major order)
/// receives the k-th smallest reference value.
pub fn histogram_match(source: &AmplitudeImage, reference: &AmplitudeImage) -> Result<AmplitudeImage> {
    let n = source.values().len();
    if n != reference.values().len() {
        return Err(Error::InvalidParameter(format!(
            "histogram matching needs equal pixel counts, got {n} and {}",
            reference.values().len()
        )));
    }
    let src: Vec<f64> = source.values().iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    // par_sort_by is stable, so equal values keep row-major order
    order.par_sort_by(|&a, &b| src[a].total_cmp(&src[b]));
    let mut sorted_ref: Vec<f64> = reference.values().iter().copied().collect();
    sorted_ref.par_sort_by(f64::total_cmp);
    let mut out = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        out[idx] = sorted_ref[rank];
    }
    AmplitudeImage::new(
        Array2::from_shape_vec(source.dim(), out).expect("pixel count checked"),
        source.dynamic_range_bits(),
    )
}

/// Optional denoiser run before speckle injection.
pub trait Despeckle: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, image: &AmplitudeImage) -> Result<AmplitudeImage>;
}

pub struct IdentityDespeckle;

impl Despeckle for IdentityDespeckle {
    fn name(&self) -> &str {
        "identity"
    }

    fn apply(&self, image: &AmplitudeImage) -> Result<AmplitudeImage> {
        Ok(image.clone())
    }
}

pub const DESPECKLE_HOOKS: &[&str] = &["identity"];

pub fn despeckle_hook(name: &str) -> Result<Box<dyn Despeckle>> {
    match name {
        "identity" => Ok(Box::new(IdentityDespeckle)),
        other => Err(Error::InvalidParameter(format!(
            "unknown despeckle hook '{other}' (available: {})",
            DESPECKLE_HOOKS.join(", ")
        ))),
    }
}

/// Where the system response comes from.
#[derive(Debug, Clone)]
pub enum FilterSource {
    Known(TransferFunction),
    Estimate {
        strategy: Strategy,
        sources: Sources,
        smoothing: Option<SmoothingParams>,
    },
    /// Direct estimation from the amplitude image under attack.
    SelfAmplitude {
        smoothing: Option<SmoothingParams>,
    },
}

impl FilterSource {
    pub fn resolve(&self, input: &AmplitudeImage) -> Result<TransferFunction> {
        match self {
            FilterSource::Known(h) => Ok(h.clone()),
            FilterSource::Estimate {
                strategy,
                sources,
                smoothing,
            } => estimate_transfer_function(sources, *strategy, *smoothing),
            FilterSource::SelfAmplitude { smoothing } => {
                estimate_transfer_function(&Sources::Amplitude(input.clone()), Strategy::Direct, *smoothing)
            }
        }
    }

    fn describe(&self) -> (String, usize) {
        match self {
            FilterSource::Known(_) => ("known".into(), 0),
            FilterSource::Estimate { strategy, sources, .. } => (
                format!("estimate:{strategy}"),
                match sources {
                    Sources::Complex(list) => list.len(),
                    Sources::Amplitude(_) => 1,
                },
            ),
            FilterSource::SelfAmplitude { .. } => ("estimate:direct:self".into(), 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub seed: u64,
    pub speckle_mode: SpeckleMode,
    /// Rayleigh scale, used in full mode only.
    pub speckle_sigma: f64,
    pub filter: FilterSource,
    pub histogram_match: bool,
    pub despeckle: String,
}

impl AttackConfig {
    /// Phase-only speckle, histogram matching on, identity despeckle.
    pub fn new(filter: FilterSource, seed: u64) -> Self {
        Self {
            seed,
            speckle_mode: SpeckleMode::PhaseOnly,
            speckle_sigma: DEFAULT_SIGMA_S,
            filter,
            histogram_match: true,
            despeckle: "identity".into(),
        }
    }

    pub fn summary(&self) -> AttackSummary {
        let (filter, source_count) = self.filter.describe();
        AttackSummary {
            seed: self.seed,
            speckle_mode: self.speckle_mode,
            speckle_sigma: match self.speckle_mode {
                SpeckleMode::Full => Some(self.speckle_sigma),
                SpeckleMode::PhaseOnly => None,
            },
            filter,
            source_count,
            histogram_match: self.histogram_match,
            despeckle: self.despeckle.clone(),
        }
    }
}

/// Serializable echo of an [`AttackConfig`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackSummary {
    pub seed: u64,
    pub speckle_mode: SpeckleMode,
    pub speckle_sigma: Option<f64>,
    pub filter: String,
    pub source_count: usize,
    pub histogram_match: bool,
    pub despeckle: String,
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    /// Ĩ
    pub attacked: AmplitudeImage,
    /// Ī_S
    pub speckled: ComplexImage,
    /// Ī_H, before histogram matching.
    pub filtered: AmplitudeImage,
    pub transfer_function: TransferFunction,
    pub config: AttackSummary,
}

pub fn run_attack(input: &AmplitudeImage, config: &AttackConfig) -> Result<AttackResult> {
    let h = config.filter.resolve(input)?;
    run_attack_with(input, config, h)
}

/// Runs the pipeline with an already resolved response, so a batch can
/// estimate once and attack many tiles.
pub fn run_attack_with(input: &AmplitudeImage, config: &AttackConfig, h: TransferFunction) -> Result<AttackResult> {
    if h.dim() != input.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim(),
            found: h.dim(),
        });
    }
    let despeckled = despeckle_hook(&config.despeckle)?.apply(input)?;
    let (rows, cols) = input.dim();
    let field = generate_speckle(rows, cols, config.speckle_mode, config.speckle_sigma, config.seed)?;
    let speckled = inject_speckle(&despeckled, &field)?;
    let filtered = apply_system(&speckled, &h)?.amplitude(input.dynamic_range_bits());
    let attacked = if config.histogram_match {
        histogram_match(&filtered, input)?
    } else {
        filtered.clone()
    };
    Ok(AttackResult {
        attacked,
        speckled,
        filtered,
        transfer_function: h,
        config: config.summary(),
    })
}

/// Ground-truth acquisition model: fully developed speckle on the
/// reflectivity, then the system response.
pub fn simulate_pristine(
    reflectivity: &AmplitudeImage,
    h_true: &TransferFunction,
    sigma_s: f64,
    seed: u64,
) -> Result<ComplexImage> {
    let (rows, cols) = reflectivity.dim();
    let field = generate_speckle(rows, cols, SpeckleMode::Full, sigma_s, seed)?;
    apply_system(&inject_speckle(reflectivity, &field)?, h_true)
}
