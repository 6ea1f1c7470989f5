//! Batch experiments: splice every manifest image with every configured
//! edit, optionally attack, and score against the pristine image.
//!
//! Outputs in `out_dir`:
//! - `rows.csv`: one line per (image, edit), in manifest order
//! - `summary.csv`: per-edit means
//! - `provenance.json`: the random draws behind every splice
//!
//! All randomness is derived from `master_seed`, the item id and the stage
//! name, so reports do not depend on thread count or completion order.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack_with, AttackConfig, FilterSource};
use crate::error::{Error, Result};
use crate::forgery::{local_edits, splice_into, EditOp, Provenance};
use crate::metrics::{auc_roc, enl, ms_ssim, ssim, write_csv, Detector, DEFAULT_DYNAMIC_RANGE};
use crate::raster::{read_amplitude, read_raster, tile, AmplitudeImage, Raster, TamperMask};
use crate::rng::{derive_seed, streams, StreamKey};
use crate::speckle::{SpeckleMode, DEFAULT_SIGMA_S};
use crate::sysid::{estimate_transfer_function, Sources, Strategy, TransferFunction};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "SARFX_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    /// Images of one product may donate to each other. Defaults to `id`.
    #[serde(default)]
    pub product: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub size: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplicePlan {
    #[serde(default = "default_edits")]
    pub edits: Vec<String>,
    /// `[height, width]`.
    #[serde(default = "default_region")]
    pub region: [usize; 2],
}

fn default_edits() -> Vec<String> {
    local_edits().iter().map(EditOp::name).collect()
}

fn default_region() -> [usize; 2] {
    [128, 128]
}

impl Default for SplicePlan {
    fn default() -> Self {
        Self {
            edits: default_edits(),
            region: default_region(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterPlan {
    Known {
        path: PathBuf,
    },
    Estimate {
        strategy: Strategy,
        sources: Vec<PathBuf>,
    },
    /// Direct estimate from each image under attack.
    SelfAmplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    #[serde(default)]
    pub speckle_mode: SpeckleMode,
    #[serde(default)]
    pub speckle_sigma: Option<f64>,
    pub filter: FilterPlan,
    #[serde(default = "yes")]
    pub histogram_match: bool,
    #[serde(default = "identity")]
    pub despeckle: String,
}

fn yes() -> bool {
    true
}

fn identity() -> String {
    "identity".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnlRegion {
    #[default]
    Whole,
    Untampered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPlan {
    #[serde(default = "default_range")]
    pub dynamic_range: f64,
    #[serde(default)]
    pub enl_region: EnlRegion,
}

fn default_range() -> f64 {
    DEFAULT_DYNAMIC_RANGE
}

impl Default for MetricPlan {
    fn default() -> Self {
        Self {
            dynamic_range: DEFAULT_DYNAMIC_RANGE,
            enl_region: EnlRegion::Whole,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub manifest: Vec<ManifestEntry>,
    #[serde(default)]
    pub tile: Option<TilePlan>,
    #[serde(default)]
    pub splice: SplicePlan,
    #[serde(default)]
    pub attack: Option<AttackPlan>,
    #[serde(default)]
    pub metrics: MetricPlan,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses the JSON config, resolves relative paths against its directory
    /// and checks that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for entry in &mut self.manifest {
            fix(&mut entry.path);
        }
        if let Some(plan) = &mut self.attack {
            match &mut plan.filter {
                FilterPlan::Known { path } => fix(path),
                FilterPlan::Estimate { sources, .. } => sources.iter_mut().for_each(fix),
                FilterPlan::SelfAmplitude => {}
            }
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut paths: Vec<&Path> = self.manifest.iter().map(|e| e.path.as_path()).collect();
        if let Some(plan) = &self.attack {
            match &plan.filter {
                FilterPlan::Known { path } => paths.push(path),
                FilterPlan::Estimate { sources, .. } => paths.extend(sources.iter().map(PathBuf::as_path)),
                FilterPlan::SelfAmplitude => {}
            }
            if plan.speckle_mode == SpeckleMode::PhaseOnly && plan.speckle_sigma.is_some() {
                return Err(Error::InvalidParameter(
                    "speckle_sigma only applies to full speckle".into(),
                ));
            }
        }
        if let Some(missing) = paths.iter().find(|p| !p.exists()) {
            return Err(Error::InvalidParameter(format!("{} does not exist", missing.display())));
        }
        for name in &self.splice.edits {
            EditOp::from_name(name)?;
        }
        let mut ids: Vec<&str> = self.manifest.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate manifest id '{}'", w[0])));
        }
        Ok(())
    }
}

/// One (image, edit) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub item: String,
    pub edit: String,
    pub edit_parameter: Option<f64>,
    pub ssim: Option<f64>,
    pub msssim: Option<f64>,
    pub enl_a: Option<f64>,
    pub enl_b: Option<f64>,
    pub delta_enl_pct: Option<f64>,
    pub auc: Option<f64>,
    pub error: Option<String>,
}

pub const ROW_HEADER: [&str; 11] = [
    "id",
    "item",
    "edit",
    "edit_parameter",
    "ssim",
    "msssim",
    "enl_a",
    "enl_b",
    "delta_enl_pct",
    "auc",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub edit: String,
    pub rows: usize,
    pub failed: usize,
    pub ssim: Option<f64>,
    pub msssim: Option<f64>,
    pub delta_enl_pct: Option<f64>,
    pub auc: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 7] = ["edit", "rows", "failed", "ssim", "msssim", "delta_enl_pct", "auc"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemProvenance {
    pub id: String,
    #[serde(flatten)]
    pub splice: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
    pub provenance: Vec<ItemProvenance>,
}

impl ExperimentReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let dir = out_dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_csv(
            BufWriter::new(File::create(dir.join("rows.csv"))?),
            &ROW_HEADER,
            &self.rows,
        )?;
        write_csv(
            BufWriter::new(File::create(dir.join("summary.csv"))?),
            &SUMMARY_HEADER,
            &self.summary,
        )?;
        let mut json = serde_json::to_string_pretty(&self.provenance)?;
        json.push('\n');
        std::fs::write(dir.join("provenance.json"), json)?;
        Ok(())
    }
}

struct Item {
    id: String,
    product: String,
    image: AmplitudeImage,
}

fn load_items(config: &ExperimentConfig) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for entry in &config.manifest {
        let image = read_amplitude(&entry.path)?;
        let product = entry.product.clone().unwrap_or_else(|| entry.id.clone());
        match config.tile {
            None => items.push(Item {
                id: entry.id.clone(),
                product,
                image,
            }),
            Some(plan) => {
                for t in tile(&image, plan.size, plan.overlap)? {
                    items.push(Item {
                        id: format!("{}@{}x{}", entry.id, t.row_offset, t.col_offset),
                        product: product.clone(),
                        image: t.image,
                    });
                }
            }
        }
    }
    Ok(items)
}

pub(crate) fn load_sources(paths: &[PathBuf]) -> Result<Sources> {
    let mut complex = Vec::new();
    for path in paths {
        match read_raster(path)? {
            Raster::Complex(c) => complex.push(c),
            Raster::Amplitude(a) if paths.len() == 1 => return Ok(Sources::Amplitude(a)),
            other => {
                return Err(Error::KindMismatch {
                    path: path.clone(),
                    expected: "complex_f64",
                    found: other.kind().name(),
                })
            }
        }
    }
    Ok(Sources::Complex(complex))
}

/// Attack settings with the shared response already resolved.
struct PreparedAttack {
    plan: AttackPlan,
    shared: Option<TransferFunction>,
}

impl PreparedAttack {
    fn new(plan: &AttackPlan) -> Result<Self> {
        let shared = match &plan.filter {
            FilterPlan::Known { path } => Some(TransferFunction::read(path)?),
            FilterPlan::Estimate { strategy, sources } => {
                Some(estimate_transfer_function(&load_sources(sources)?, *strategy, None)?)
            }
            FilterPlan::SelfAmplitude => None,
        };
        Ok(Self {
            plan: plan.clone(),
            shared,
        })
    }

    fn run(&self, input: &AmplitudeImage, seed: u64) -> Result<AmplitudeImage> {
        let filter = match &self.shared {
            Some(h) => FilterSource::Known(h.clone()),
            None => FilterSource::SelfAmplitude { smoothing: None },
        };
        let config = AttackConfig {
            seed,
            speckle_mode: self.plan.speckle_mode,
            speckle_sigma: self.plan.speckle_sigma.unwrap_or(DEFAULT_SIGMA_S),
            filter,
            histogram_match: self.plan.histogram_match,
            despeckle: self.plan.despeckle.clone(),
        };
        let h = config.filter.resolve(input)?;
        Ok(run_attack_with(input, &config, h)?.attacked)
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV}='{v}' is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

struct Scored {
    row: ReportRow,
    provenance: Option<ItemProvenance>,
}

#[allow(clippy::too_many_arguments)]
fn score(
    items: &[Item],
    index: usize,
    edit_name: &str,
    config: &ExperimentConfig,
    attack: Option<&PreparedAttack>,
    detector: Option<&dyn Detector>,
) -> Scored {
    let item = &items[index];
    let id = format!("{}/{}", item.id, edit_name);
    let mut row = ReportRow {
        id: id.clone(),
        item: item.id.clone(),
        edit: edit_name.to_string(),
        edit_parameter: None,
        ssim: None,
        msssim: None,
        enl_a: None,
        enl_b: None,
        delta_enl_pct: None,
        auc: None,
        error: None,
    };
    let mut provenance = None;
    let result = (|| -> Result<()> {
        let edit = EditOp::from_name(edit_name)?;
        let siblings: Vec<usize> = (0..items.len()).filter(|&j| items[j].product == item.product).collect();
        let images: Vec<AmplitudeImage> = siblings.iter().map(|&j| items[j].image.clone()).collect();
        let target = siblings
            .iter()
            .position(|&j| j == index)
            .expect("item is its own sibling");
        let donor = if images.len() > 1 {
            let mut rng = StreamKey::new(derive_seed(config.master_seed, &id, "donor"), streams::SPLICE_DRAWS).rng();
            let d = rng.random_range(0..images.len() - 1);
            if d >= target {
                d + 1
            } else {
                d
            }
        } else {
            target
        };
        let region = (config.splice.region[0], config.splice.region[1]);
        let forged = splice_into(
            &images,
            donor,
            target,
            region,
            None,
            &edit,
            derive_seed(config.master_seed, &id, "splice"),
        )?;
        row.edit_parameter = forged.provenance.edit.parameter;
        let mut splice_record = forged.provenance.clone();
        splice_record.donor_tile = siblings[donor];
        splice_record.target_tile = index;
        provenance = Some(ItemProvenance {
            id: id.clone(),
            splice: splice_record,
        });

        let output = match attack {
            Some(a) => a.run(&forged.spliced, derive_seed(config.master_seed, &id, "attack"))?,
            None => forged.spliced.clone(),
        };
        let pristine = &item.image;
        let range = config.metrics.dynamic_range;
        let region_mask = match config.metrics.enl_region {
            EnlRegion::Whole => None,
            EnlRegion::Untampered => Some(TamperMask::new(forged.mask.values().mapv(|m| 1 - m))?),
        };
        let enl_a = enl(&output, region_mask.as_ref())?;
        let enl_b = enl(pristine, region_mask.as_ref())?;
        row.ssim = Some(ssim(&output, pristine, range)?);
        row.msssim = Some(ms_ssim(&output, pristine, range)?.value);
        row.enl_a = Some(enl_a);
        row.enl_b = Some(enl_b);
        row.delta_enl_pct = Some(100.0 * (enl_a - enl_b).abs() / enl_b);
        if let Some(d) = detector {
            row.auc = Some(auc_roc(&d.fingerprint(&output)?, &forged.mask)?.max_polarity);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    Scored { row, provenance }
}

fn mean_of(rows: &[&ReportRow], field: impl Fn(&ReportRow) -> Option<f64>) -> Option<f64> {
    let values: Vec<f64> = rows.iter().filter_map(|r| field(r)).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn summarize(edits: &[String], rows: &[ReportRow]) -> Vec<SummaryRow> {
    edits
        .iter()
        .map(|edit| {
            let these: Vec<&ReportRow> = rows.iter().filter(|r| &r.edit == edit).collect();
            SummaryRow {
                edit: edit.clone(),
                rows: these.len(),
                failed: these.iter().filter(|r| r.error.is_some()).count(),
                ssim: mean_of(&these, |r| r.ssim),
                msssim: mean_of(&these, |r| r.msssim),
                delta_enl_pct: mean_of(&these, |r| r.delta_enl_pct),
                auc: mean_of(&these, |r| r.auc),
            }
        })
        .collect()
}

/// Runs the whole plan and writes the report files. Per-item failures are
/// recorded in their rows; only setup errors abort the run.
pub fn run_experiment(config: &ExperimentConfig, detector: Option<&dyn Detector>) -> Result<ExperimentReport> {
    config.validate()?;
    let items = load_items(config)?;
    let attack = config.attack.as_ref().map(PreparedAttack::new).transpose()?;
    let jobs: Vec<(usize, &String)> = (0..items.len())
        .flat_map(|i| config.splice.edits.iter().map(move |e| (i, e)))
        .collect();
    let scored: Vec<Scored> = worker_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(i, edit)| score(&items, i, edit, config, attack.as_ref(), detector))
            .collect()
    });
    let mut rows = Vec::with_capacity(scored.len());
    let mut provenance = Vec::new();
    for s in scored {
        rows.push(s.row);
        provenance.extend(s.provenance);
    }
    let report = ExperimentReport {
        summary: summarize(&config.splice.edits, &rows),
        rows,
        provenance,
    };
    report.write(&config.out_dir)?;
    Ok(report)
}
