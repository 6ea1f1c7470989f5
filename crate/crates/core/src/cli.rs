//! Command-line front end. [`parse_args`] resolves argv into a [`Command`];
//! [`execute`] runs it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::attack::{run_attack, AttackConfig, FilterSource};
use crate::error::{Error, Result};
use crate::experiment::{load_sources, run_experiment, ExperimentConfig};
use crate::forgery::{splice_into, EditOp, Provenance};
use crate::metrics::{evaluate, write_batch_csv, BatchRow, FingerprintMap, DEFAULT_DYNAMIC_RANGE};
use crate::raster::{read_amplitude, read_mask, read_raster, tile, write_raster, Raster};
use crate::speckle::{SpeckleMode, DEFAULT_SIGMA_S};
use crate::spectral::{azimuthal_profile, forward_dft_amplitude, forward_dft_complex};
use crate::sysid::{estimate_transfer_function, Strategy, TransferFunction};

#[derive(Debug, Parser)]
#[command(
    name = "sarfx",
    version,
    about = "SAR splicing forgeries and counter-forensic re-acquisition"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Splice an edited donor region into a target image.
    Forge(ForgeArgs),
    /// Re-acquire an amplitude image through speckle injection and a system response.
    Attack(AttackArgs),
    /// Estimate the system response from source images.
    EstimateFilter(EstimateArgs),
    /// Quality and detection metrics.
    Metrics(MetricsArgs),
    /// Azimuthal spectrum profile as CSV.
    Spectrum(SpectrumArgs),
    /// Cut an image into overlapping square tiles.
    Tile(TileArgs),
    /// Run a JSON-configured batch experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct ForgeArgs {
    #[arg(long)]
    target: PathBuf,
    /// Defaults to the target itself, with disjoint regions.
    #[arg(long)]
    donor: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    edit: String,
    #[arg(long, value_parser = ["near", "far"])]
    edit_class: Option<String>,
    /// `WxH` or `WxH+x+y` (target position).
    #[arg(long)]
    region: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_image: PathBuf,
    #[arg(long)]
    out_mask: PathBuf,
    /// Also write the mask as 8-bit PGM.
    #[arg(long)]
    out_pgm: Option<PathBuf>,
    /// Provenance JSON; printed to stdout when omitted.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long)]
    input: PathBuf,
    /// `known:<path>`, `estimate:<strategy>:<a,b,...>` or `self`.
    #[arg(long, conflicts_with_all = ["strategy", "sources"])]
    filter: Option<String>,
    /// Alternative to `--filter estimate:...`.
    #[arg(long, requires = "sources")]
    strategy: Option<String>,
    #[arg(long, num_args = 1.., requires = "strategy")]
    sources: Vec<PathBuf>,
    #[arg(long, default_value = "phase-only")]
    speckle_mode: String,
    #[arg(long)]
    speckle_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_histogram_match: bool,
    #[arg(long, default_value = "identity")]
    despeckle: String,
    /// Write Ī_S, Ī_H and H next to the output.
    #[arg(long)]
    dump_intermediates: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    strategy: String,
    #[arg(long, num_args = 1.., required = true)]
    sources: Vec<PathBuf>,
    #[arg(long)]
    smoothing_sigma: Option<f64>,
    #[arg(long)]
    smoothing_kernel: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Image under evaluation.
    #[arg(long, required_unless_present = "batch")]
    a: Option<PathBuf>,
    /// Reference image.
    #[arg(long, required_unless_present = "batch")]
    b: Option<PathBuf>,
    /// Mask selecting the ENL region.
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long, requires = "mask")]
    fingerprint: Option<PathBuf>,
    #[arg(long, requires = "fingerprint")]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DYNAMIC_RANGE)]
    dynamic_range: f64,
    /// CSV with columns `id,a,b[,region,fingerprint,mask]`.
    #[arg(long, conflicts_with_all = ["a", "b", "region", "fingerprint", "mask"])]
    batch: Option<PathBuf>,
    /// JSON report or batch CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1024)]
    size: usize,
    #[arg(long, default_value_t = 512)]
    overlap: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Where `attack` takes its response from.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Known(PathBuf),
    Estimate { strategy: Strategy, sources: Vec<PathBuf> },
    SelfAmplitude,
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "self" {
            return Ok(Self::SelfAmplitude);
        }
        if let Some(path) = s.strip_prefix("known:") {
            if path.is_empty() {
                return Err(Error::InvalidParameter("known filter needs a path".into()));
            }
            return Ok(Self::Known(path.into()));
        }
        if let Some(rest) = s.strip_prefix("estimate:") {
            let (strategy, paths) = rest
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter(format!("expected estimate:<strategy>:<paths>, got '{s}'")))?;
            let strategy: Strategy = strategy.parse()?;
            if strategy == Strategy::Known {
                return Err(Error::InvalidParameter("'known' is not an estimation strategy".into()));
            }
            let sources: Vec<PathBuf> = paths.split(',').filter(|p| !p.is_empty()).map(PathBuf::from).collect();
            if sources.is_empty() {
                return Err(Error::InvalidParameter("estimation needs at least one source".into()));
            }
            return Ok(Self::Estimate { strategy, sources });
        }
        Err(Error::InvalidParameter(format!("unrecognized filter '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub width: usize,
    pub height: usize,
    pub origin: Option<(usize, usize)>,
}

impl FromStr for Region {
    type Err = Error;

    /// `WxH` or `WxH+x+y`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("region '{s}' is not WxH or WxH+x+y"));
        let mut parts = s.split('+');
        let size = parts.next().ok_or_else(bad)?;
        let (w, h) = size.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.parse().map_err(|_| bad())?;
        let height: usize = h.parse().map_err(|_| bad())?;
        let rest: Vec<&str> = parts.collect();
        let origin = match rest.as_slice() {
            [] => None,
            [x, y] => Some((y.parse().map_err(|_| bad())?, x.parse().map_err(|_| bad())?)),
            _ => return Err(bad()),
        };
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Self { width, height, origin })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgeCommand {
    pub target: PathBuf,
    pub donor: Option<PathBuf>,
    pub edit: EditOp,
    pub region: Region,
    pub seed: u64,
    pub out_image: PathBuf,
    pub out_mask: PathBuf,
    pub out_pgm: Option<PathBuf>,
    pub provenance: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackCommand {
    pub input: PathBuf,
    pub filter: FilterSpec,
    pub speckle_mode: SpeckleMode,
    pub speckle_sigma: f64,
    pub seed: u64,
    pub histogram_match: bool,
    pub despeckle: String,
    pub dump_intermediates: bool,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCommand {
    pub strategy: Strategy,
    pub sources: Vec<PathBuf>,
    pub smoothing: Option<(f64, usize)>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsCommand {
    Single {
        a: PathBuf,
        b: PathBuf,
        region: Option<PathBuf>,
        detection: Option<(PathBuf, PathBuf)>,
        dynamic_range: f64,
        out: Option<PathBuf>,
    },
    Batch {
        list: PathBuf,
        dynamic_range: f64,
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileCommand {
    pub input: PathBuf,
    pub size: usize,
    pub overlap: usize,
    pub out_dir: PathBuf,
}

impl TileCommand {
    pub fn stride(&self) -> usize {
        self.size - self.overlap
    }
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Forge(ForgeCommand),
    Attack(AttackCommand),
    EstimateFilter(EstimateCommand),
    Metrics(MetricsCommand),
    Spectrum {
        input: PathBuf,
        out: Option<PathBuf>,
    },
    Tile(TileCommand),
    Experiment {
        config: PathBuf,
        seed: Option<u64>,
        out_dir: Option<PathBuf>,
    },
}

fn usage(kind: ErrorKind, message: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, message)
}

fn invalid(e: Error) -> clap::Error {
    usage(ErrorKind::ValueValidation, e)
}

/// Parses argv (including the program name). Usage errors carry exit code 2.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Ok(match Cli::try_parse_from(argv)?.command {
        Sub::Forge(a) => Command::Forge(ForgeCommand {
            edit: EditOp::from_parts(&a.edit, a.edit_class.as_deref()).map_err(invalid)?,
            region: a.region.parse().map_err(invalid)?,
            target: a.target,
            donor: a.donor,
            seed: a.seed,
            out_image: a.out_image,
            out_mask: a.out_mask,
            out_pgm: a.out_pgm,
            provenance: a.provenance,
        }),
        Sub::Attack(a) => {
            let filter = match (a.filter, a.strategy) {
                (Some(f), _) => f.parse().map_err(invalid)?,
                (None, Some(s)) => FilterSpec::Estimate {
                    strategy: s.parse().map_err(invalid)?,
                    sources: a.sources,
                },
                (None, None) => {
                    return Err(usage(
                        ErrorKind::MissingRequiredArgument,
                        "one of --filter or --strategy/--sources is required",
                    ))
                }
            };
            let speckle_mode: SpeckleMode = a.speckle_mode.parse().map_err(invalid)?;
            if speckle_mode == SpeckleMode::PhaseOnly && a.speckle_sigma.is_some() {
                return Err(usage(
                    ErrorKind::ArgumentConflict,
                    "--speckle-sigma only applies with --speckle-mode full",
                ));
            }
            Command::Attack(AttackCommand {
                input: a.input,
                filter,
                speckle_mode,
                speckle_sigma: a.speckle_sigma.unwrap_or(DEFAULT_SIGMA_S),
                seed: a.seed,
                histogram_match: !a.no_histogram_match,
                despeckle: a.despeckle,
                dump_intermediates: a.dump_intermediates,
                out: a.out,
            })
        }
        Sub::EstimateFilter(a) => {
            let strategy: Strategy = a.strategy.parse().map_err(invalid)?;
            if strategy == Strategy::Known {
                return Err(usage(ErrorKind::InvalidValue, "'known' is not an estimation strategy"));
            }
            let smoothing = match (a.smoothing_sigma, a.smoothing_kernel) {
                (None, None) => None,
                (Some(s), Some(k)) => Some((s, k)),
                _ => {
                    return Err(usage(
                        ErrorKind::MissingRequiredArgument,
                        "--smoothing-sigma and --smoothing-kernel go together",
                    ))
                }
            };
            Command::EstimateFilter(EstimateCommand {
                strategy,
                sources: a.sources,
                smoothing,
                out: a.out,
            })
        }
        Sub::Metrics(a) => Command::Metrics(match a.batch {
            Some(list) => MetricsCommand::Batch {
                list,
                dynamic_range: a.dynamic_range,
                out: a.out,
            },
            None => MetricsCommand::Single {
                a: a.a.expect("required unless batch"),
                b: a.b.expect("required unless batch"),
                region: a.region,
                detection: a.fingerprint.zip(a.mask),
                dynamic_range: a.dynamic_range,
                out: a.out,
            },
        }),
        Sub::Spectrum(a) => Command::Spectrum {
            input: a.input,
            out: a.out,
        },
        Sub::Tile(a) => {
            if a.size == 0 || a.overlap >= a.size {
                return Err(usage(
                    ErrorKind::ValueValidation,
                    format!("overlap {} must be smaller than size {}", a.overlap, a.size),
                ));
            }
            Command::Tile(TileCommand {
                input: a.input,
                size: a.size,
                overlap: a.overlap,
                out_dir: a.out_dir,
            })
        }
        Sub::Experiment(a) => Command::Experiment {
            config: a.config,
            seed: a.seed,
            out_dir: a.out_dir,
        },
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.sarf"))
}

#[derive(Serialize)]
struct ForgeRecord<'a> {
    target: &'a Path,
    donor: &'a Path,
    #[serde(flatten)]
    splice: &'a Provenance,
}

fn forge(cmd: &ForgeCommand) -> Result<()> {
    let target = read_amplitude(&cmd.target)?;
    let donor_path = cmd.donor.as_deref().unwrap_or(&cmd.target);
    let (images, donor) = match &cmd.donor {
        Some(p) => (vec![target, read_amplitude(p)?], 1),
        None => (vec![target], 0),
    };
    let region = (cmd.region.height, cmd.region.width);
    let out = splice_into(&images, donor, 0, region, cmd.region.origin, &cmd.edit, cmd.seed)?;
    write_raster(&Raster::Amplitude(out.spliced), &cmd.out_image)?;
    write_raster(&Raster::Mask(out.mask.clone()), &cmd.out_mask)?;
    if let Some(p) = &cmd.out_pgm {
        out.mask.write_pgm(p)?;
    }
    let record = ForgeRecord {
        target: &cmd.target,
        donor: donor_path,
        splice: &out.provenance,
    };
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    write_text(cmd.provenance.as_deref(), &json)
}

fn attack(cmd: &AttackCommand) -> Result<()> {
    let input = read_amplitude(&cmd.input)?;
    let filter = match &cmd.filter {
        FilterSpec::Known(p) => FilterSource::Known(TransferFunction::read(p)?),
        FilterSpec::Estimate { strategy, sources } => FilterSource::Estimate {
            strategy: *strategy,
            sources: load_sources(sources)?,
            smoothing: None,
        },
        FilterSpec::SelfAmplitude => FilterSource::SelfAmplitude { smoothing: None },
    };
    let config = AttackConfig {
        seed: cmd.seed,
        speckle_mode: cmd.speckle_mode,
        speckle_sigma: cmd.speckle_sigma,
        filter,
        histogram_match: cmd.histogram_match,
        despeckle: cmd.despeckle.clone(),
    };
    let result = run_attack(&input, &config)?;
    write_raster(&Raster::Amplitude(result.attacked), &cmd.out)?;
    if cmd.dump_intermediates {
        write_raster(&Raster::Complex(result.speckled), with_suffix(&cmd.out, "speckled"))?;
        write_raster(&Raster::Amplitude(result.filtered), with_suffix(&cmd.out, "filtered"))?;
        result.transfer_function.write(with_suffix(&cmd.out, "h"))?;
    }
    let mut json = serde_json::to_string_pretty(&result.config)?;
    json.push('\n');
    write_text(None, &json)
}

fn estimate(cmd: &EstimateCommand) -> Result<()> {
    let smoothing = cmd
        .smoothing
        .map(|(sigma, kernel_size)| crate::sysid::SmoothingParams { sigma, kernel_size });
    let h = estimate_transfer_function(&load_sources(&cmd.sources)?, cmd.strategy, smoothing)?;
    h.write(&cmd.out)
}

#[derive(serde::Deserialize)]
struct BatchEntry {
    id: String,
    a: PathBuf,
    b: PathBuf,
    #[serde(default)]
    region: Option<PathBuf>,
    #[serde(default)]
    fingerprint: Option<PathBuf>,
    #[serde(default)]
    mask: Option<PathBuf>,
}

fn metrics(cmd: &MetricsCommand) -> Result<()> {
    let single = |a: &Path, b: &Path, region: Option<&Path>, detection: Option<(&Path, &Path)>, range: f64| {
        let region = region.map(read_mask).transpose()?;
        let detection = match detection {
            Some((f, m)) => Some((FingerprintMap::read(f)?, read_mask(m)?)),
            None => None,
        };
        evaluate(
            &read_amplitude(a)?,
            &read_amplitude(b)?,
            region.as_ref(),
            detection.as_ref().map(|(f, m)| (f, m)),
            range,
        )
    };
    match cmd {
        MetricsCommand::Single {
            a,
            b,
            region,
            detection,
            dynamic_range,
            out,
        } => {
            let report = single(
                a,
                b,
                region.as_deref(),
                detection.as_ref().map(|(f, m)| (f.as_path(), m.as_path())),
                *dynamic_range,
            )?;
            let mut json = report.to_json()?;
            json.push('\n');
            write_text(out.as_deref(), &json)
        }
        MetricsCommand::Batch {
            list,
            dynamic_range,
            out,
        } => {
            let base = list.parent().unwrap_or(Path::new("."));
            let fix = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
            let mut rows = Vec::new();
            for entry in csv::Reader::from_path(list)?.deserialize::<BatchEntry>() {
                let e = entry?;
                let fp = e.fingerprint.as_deref().map(fix);
                let mask = e.mask.as_deref().map(fix);
                let report = single(
                    &fix(&e.a),
                    &fix(&e.b),
                    e.region.as_deref().map(fix).as_deref(),
                    fp.as_deref().zip(mask.as_deref()),
                    *dynamic_range,
                )?;
                rows.push(BatchRow::from_report(e.id, &report));
            }
            match out {
                Some(p) => write_batch_csv(BufWriter::new(File::create(p)?), &rows),
                None => write_batch_csv(std::io::stdout().lock(), &rows),
            }
        }
    }
}

fn spectrum(input: &Path, out: Option<&Path>) -> Result<()> {
    let spec = match read_raster(input)? {
        Raster::Amplitude(a) => forward_dft_amplitude(&a),
        Raster::Complex(c) => forward_dft_complex(&c),
        other => {
            return Err(Error::KindMismatch {
                path: input.to_path_buf(),
                expected: "amplitude_f64 or complex_f64",
                found: other.kind().name(),
            })
        }
    };
    write_text(out, &azimuthal_profile(&spec).to_csv())
}

fn tile_command(cmd: &TileCommand) -> Result<()> {
    let stem = cmd
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("tile")
        .to_string();
    std::fs::create_dir_all(&cmd.out_dir)?;
    let raster = read_raster(&cmd.input)?;
    let name = |r: usize, c: usize| cmd.out_dir.join(format!("{stem}_r{r}_c{c}.sarf"));
    let mut written = Vec::new();
    match raster {
        Raster::Amplitude(a) => {
            for t in tile(&a, cmd.size, cmd.overlap)? {
                let p = name(t.row_offset, t.col_offset);
                write_raster(&Raster::Amplitude(t.image), &p)?;
                written.push(p);
            }
        }
        Raster::Complex(c) => {
            for t in tile(&c, cmd.size, cmd.overlap)? {
                let p = name(t.row_offset, t.col_offset);
                write_raster(&Raster::Complex(t.image), &p)?;
                written.push(p);
            }
        }
        Raster::Mask(m) => {
            for t in tile(&m, cmd.size, cmd.overlap)? {
                let p = name(t.row_offset, t.col_offset);
                write_raster(&Raster::Mask(t.image), &p)?;
                written.push(p);
            }
        }
    }
    let mut stdout = std::io::stdout().lock();
    for p in written {
        writeln!(stdout, "{}", p.display())?;
    }
    Ok(())
}

/// Runs a parsed command. Returns `false` when a batch finished with failed items.
pub fn execute(command: &Command) -> Result<bool> {
    match command {
        Command::Forge(c) => forge(c)?,
        Command::Attack(c) => attack(c)?,
        Command::EstimateFilter(c) => estimate(c)?,
        Command::Metrics(c) => metrics(c)?,
        Command::Spectrum { input, out } => spectrum(input, out.as_deref())?,
        Command::Tile(c) => tile_command(c)?,
        Command::Experiment { config, seed, out_dir } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = seed {
                cfg.master_seed = *s;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d.clone();
            }
            let report = run_experiment(&cfg, None)?;
            println!(
                "{} rows, {} failed, written to {}",
                report.rows.len(),
                report.failed(),
                cfg.out_dir.display()
            );
            return Ok(report.failed() == 0);
        }
    }
    Ok(true)
}

/// Entry point for the binary: exit code 0 on success, 1 on runtime
/// failure, 2 on usage errors.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let command = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
