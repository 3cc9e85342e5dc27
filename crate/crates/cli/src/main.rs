//! Command-line front end: dataset generation (stylize, eed, shuffle,
//! corrupt) and offline scoring (miou, cdsb, robustness, accrel) on top of
//! the library runners.
//!
//! Every command prints a single-line JSON summary to stdout; diagnostics
//! go to stderr. Exit codes: 0 on success, 2 on usage errors (from the
//! argument parser), 3 on I/O or codec failures, 4 on validation failures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cuebias_core::corrupt::{
    corruption_grid, CorruptionContext, CorruptionFamily, CorruptionSpec, DatasetMeans,
};
use cuebias_core::eed::EEDPreset;
use cuebias_core::image::load_label_png;
use cuebias_core::metrics::{
    acc_rel, cdsb, miou, per_class_iou, pixel_accuracy, robustness_score, CDSBInputs,
    ConfusionMatrix, RobustnessTable, CITYSCAPES_SHAPE_NORM, CITYSCAPES_TEXTURE_NORM,
    PASCAL_CONTEXT_SHAPE_NORM, PASCAL_CONTEXT_TEXTURE_NORM,
};
use cuebias_core::pipeline::{
    corrupt_dataset, eed_dataset, list_pngs, shuffle_dataset, stylize_dataset, ResizeProtocol,
    StylizeParams,
};
use cuebias_core::shuffle::ShuffleSpec;
use cuebias_core::stylize::{StylePool, StyleSource};
use cuebias_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cuebias",
    version,
    about = "Cue-conflict dataset generation and segmentation scoring",
    propagate_version = true
)]
struct Cli {
    /// Flat JSON config file (keys: workers, seed, means, reduced_contrast).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads; 0 or absent means one per CPU. The CUEBIAS_WORKERS
    /// environment variable overrides this flag and the config file.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-texture random Voronoi cells of each image.
    Stylize(StylizeArgs),
    /// Smooth each image with edge-enhancing diffusion.
    Eed(EedArgs),
    /// Rearrange each image (and its labels) by shuffling Voronoi patches.
    Shuffle(ShuffleArgs),
    /// Degrade each image along the corruption grid or a single cell.
    Corrupt(CorruptArgs),
    /// Print the corruption grid, one JSON line per cell.
    Grid(GridArgs),
    /// Segmentation scores from label masks or summary tables.
    Score(ScoreArgs),
}

#[derive(Args)]
struct StylizeArgs {
    /// Directory of content PNGs (searched recursively).
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    /// Output directory; mirrors the input layout and gets manifest.jsonl.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Directory of style PNGs for statistics alignment.
    #[arg(
        long,
        value_name = "DIR",
        conflicts_with = "prerendered",
        required_unless_present = "prerendered"
    )]
    styles: Option<PathBuf>,
    /// Directory of prerendered layers, one <content-id>/<style-id>.png
    /// per pair.
    #[arg(long, value_name = "DIR")]
    prerendered: Option<PathBuf>,
    /// Number of Voronoi cells per image.
    #[arg(short = 'n', long, value_name = "N")]
    cells: usize,
    /// Per-cell stylization probability in [0, 1].
    #[arg(short = 'p', long, value_name = "P")]
    probability: f64,
    /// Global seed (falls back to the config file, then 0).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Upscale content to this size before stylization.
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    resize_up: Option<(usize, usize)>,
    /// Downscale the stylized result to this size.
    #[arg(long, value_name = "WxH", value_parser = parse_size)]
    resize_down: Option<(usize, usize)>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EedPresetName {
    /// kappa = 1/15, 5-tap sigma = sqrt(5) pre-smoothing.
    EedMild,
    /// kappa = 1/10, 9-tap sigma = 3 pre-smoothing.
    EedStrong,
}

#[derive(Args)]
struct EedArgs {
    /// Directory of input PNGs (searched recursively).
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    /// Output directory; mirrors the input layout.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Parameter preset.
    #[arg(long, value_enum)]
    preset: EedPresetName,
    /// Override the preset's contrast scale.
    #[arg(long, value_name = "K")]
    kappa: Option<f64>,
    /// Override the preset's pre-smoothing tap count (odd).
    #[arg(long, value_name = "TAPS")]
    kernel_size: Option<usize>,
    /// Override the preset's pre-smoothing standard deviation.
    #[arg(long, value_name = "SIGMA")]
    sigma: Option<f64>,
    /// Override the preset's step count.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
    /// Override the preset's time step (must stay in (0, 0.25]).
    #[arg(long, value_name = "TAU")]
    tau: Option<f64>,
}

#[derive(Args)]
struct ShuffleArgs {
    /// Directory of image PNGs (searched recursively).
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    /// Directory of label PNGs at the same relative paths.
    #[arg(long, value_name = "DIR")]
    labels: PathBuf,
    /// Output directory; gets images/, labels/ and manifest.jsonl.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of Voronoi patches per image.
    #[arg(short = 'k', long, value_name = "K")]
    patches: usize,
    /// Global seed (falls back to the config file, then 0).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct CorruptArgs {
    /// Directory of input PNGs (searched recursively).
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    /// Output directory; gets <family>/<level>/... and manifest.jsonl.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Apply the full severity grid.
    #[arg(long, conflicts_with_all = ["family", "level"])]
    grid: bool,
    /// With --grid: include the noise-on-reduced-contrast family.
    #[arg(long, requires = "grid")]
    extended: bool,
    /// Apply a single family (contrast, uniform-noise,
    /// noise-on-reduced-contrast, low-pass, high-pass, phase-noise).
    #[arg(long, value_name = "FAMILY", requires = "level", required_unless_present = "grid")]
    family: Option<String>,
    /// Severity for --family.
    #[arg(long, value_name = "LEVEL", requires = "family")]
    level: Option<f64>,
    /// Per-channel means for high-pass re-centering, comma separated
    /// (1 value for grayscale input, 3 for RGB; default: Cityscapes means).
    #[arg(long, value_name = "R,G,B", value_parser = parse_means)]
    means: Option<Means>,
    /// Contrast base of the noise-on-reduced-contrast family (default 0.3).
    #[arg(long, value_name = "C")]
    reduced_contrast: Option<f64>,
    /// Global seed (falls back to the config file, then 0).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct GridArgs {
    /// Include the noise-on-reduced-contrast family.
    #[arg(long)]
    extended: bool,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(subcommand)]
    command: ScoreCommand,
}

#[derive(Subcommand)]
enum ScoreCommand {
    /// Mean IoU and pixel accuracy of predictions against ground truth.
    Miou(MiouArgs),
    /// Cue-decision shape bias from shape- and texture-cue mIoUs.
    Cdsb(CdsbArgs),
    /// Corruption robustness from a per-family mIoU table.
    Robustness(RobustnessArgs),
    /// Relative accuracy of stylized-data predictions against clean ones.
    Accrel(AccrelArgs),
}

#[derive(Args)]
struct MiouArgs {
    /// Directory of prediction masks (8-bit grayscale PNGs).
    #[arg(long, value_name = "DIR")]
    predictions: PathBuf,
    /// Directory of ground-truth masks at the same relative paths.
    #[arg(long, value_name = "DIR")]
    ground_truth: PathBuf,
    /// Number of classes (ids 0..classes; 255 is ignored).
    #[arg(long, value_name = "C")]
    classes: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Dataset {
    Cityscapes,
    PascalContext,
}

impl Dataset {
    /// (shape, texture) normalization ceilings.
    fn cue_norms(self) -> (f64, f64) {
        match self {
            Dataset::Cityscapes => (CITYSCAPES_SHAPE_NORM, CITYSCAPES_TEXTURE_NORM),
            Dataset::PascalContext => (PASCAL_CONTEXT_SHAPE_NORM, PASCAL_CONTEXT_TEXTURE_NORM),
        }
    }
}

#[derive(Args)]
struct CdsbArgs {
    /// mIoU (percent) on the shape-cue dataset.
    #[arg(long, value_name = "IOU")]
    iou_shape: f64,
    /// mIoU (percent) on the texture-cue dataset.
    #[arg(long, value_name = "IOU")]
    iou_texture: f64,
    /// Dataset whose single-cue normalization ceilings apply.
    #[arg(
        long,
        value_enum,
        conflicts_with_all = ["shape_norm", "texture_norm"],
        required_unless_present_all = ["shape_norm", "texture_norm"]
    )]
    dataset: Option<Dataset>,
    /// Explicit shape-cue normalization ceiling.
    #[arg(long, value_name = "S", requires = "texture_norm")]
    shape_norm: Option<f64>,
    /// Explicit texture-cue normalization ceiling.
    #[arg(long, value_name = "T", requires = "shape_norm")]
    texture_norm: Option<f64>,
}

#[derive(Args)]
struct RobustnessArgs {
    /// JSON table: {"miou_original": M, "families": {"<name>": [mIoU...]}}.
    #[arg(long, value_name = "FILE")]
    table: PathBuf,
}

#[derive(Args)]
struct AccrelArgs {
    /// Directory of prediction masks for the stylized dataset.
    #[arg(long, value_name = "DIR")]
    stylized: PathBuf,
    /// Directory of prediction masks for the clean dataset.
    #[arg(long, value_name = "DIR")]
    clean: PathBuf,
    /// Directory of ground-truth masks at the same relative paths.
    #[arg(long, value_name = "DIR")]
    ground_truth: PathBuf,
    /// Number of classes (ids 0..classes; 255 is ignored).
    #[arg(long, value_name = "C")]
    classes: usize,
}

/// Settings a config file can provide; flags win over these (and
/// CUEBIAS_WORKERS wins over the --workers flag).
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    workers: Option<usize>,
    seed: Option<u64>,
    means: Option<Vec<f64>>,
    reduced_contrast: Option<f64>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
}

/// CUEBIAS_WORKERS beats the flag, the flag beats the config file.
fn resolve_workers(flag: Option<usize>, config: &Config) -> Result<Option<usize>> {
    if let Ok(raw) = std::env::var("CUEBIAS_WORKERS") {
        let n = raw.trim().parse::<usize>().map_err(|_| {
            Error::InvalidParameter(format!(
                "CUEBIAS_WORKERS must be a non-negative integer, got {raw:?}"
            ))
        })?;
        return Ok(Some(n));
    }
    Ok(flag.or(config.workers))
}

fn resolve_seed(flag: Option<u64>, config: &Config) -> u64 {
    flag.or(config.seed).unwrap_or(0)
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    Ok((w, h))
}

/// Comma-separated channel means. A newtype keeps clap from treating
/// the `Vec` as a repeatable argument.
#[derive(Debug, Clone)]
struct Means(Vec<f64>);

fn parse_means(s: &str) -> std::result::Result<Means, String> {
    let values = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad channel mean {t:?}"))
        })
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if values.len() != 1 && values.len() != 3 {
        return Err(format!("need 1 or 3 channel means, got {}", values.len()));
    }
    Ok(Means(values))
}

/// Tally a confusion matrix over two directories of masks paired by
/// relative path. The id sets must match exactly.
fn confusion_over_dirs(
    predictions: &Path,
    ground_truth: &Path,
    classes: usize,
) -> Result<ConfusionMatrix> {
    let gt_entries = list_pngs(ground_truth)?;
    let pred_entries = list_pngs(predictions)?;
    let gt_ids: Vec<&str> = gt_entries.iter().map(|(id, _)| id.as_str()).collect();
    let pred_ids: Vec<&str> = pred_entries.iter().map(|(id, _)| id.as_str()).collect();
    if gt_ids != pred_ids {
        let mut parts = Vec::new();
        if let Some(id) = gt_ids.iter().find(|id| !pred_ids.contains(id)) {
            parts.push(format!("no prediction for {id:?}"));
        }
        if let Some(id) = pred_ids.iter().find(|id| !gt_ids.contains(id)) {
            parts.push(format!("prediction {id:?} has no ground truth"));
        }
        return Err(Error::InvalidParameter(format!(
            "prediction and ground-truth ids differ ({})",
            parts.join("; ")
        )));
    }
    let mut cm = ConfusionMatrix::new(classes)?;
    for ((_, gt_path), (_, pred_path)) in gt_entries.iter().zip(&pred_entries) {
        let gt = load_label_png(gt_path)?;
        let pred = load_label_png(pred_path)?;
        cm.accumulate(&gt, &pred)?;
    }
    Ok(cm)
}

fn emit(value: serde_json::Value) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{value}") {
        Ok(()) => Ok(()),
        // The downstream consumer closed the pipe (e.g. `cuebias grid | head`);
        // stop quietly instead of panicking or erroring.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(source) => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    let workers = resolve_workers(cli.workers, &config)?;

    match cli.command {
        Command::Stylize(args) => {
            let source = match (&args.styles, &args.prerendered) {
                (Some(dir), None) => StyleSource::Builtin(StylePool::load(dir)?),
                (None, Some(dir)) => StyleSource::Prerendered { dir: dir.clone() },
                _ => unreachable!("clap enforces exactly one style source"),
            };
            let params = StylizeParams {
                n: args.cells,
                p: args.probability,
                resize: ResizeProtocol {
                    up: args.resize_up,
                    down: args.resize_down,
                },
            };
            let seed = resolve_seed(args.seed, &config);
            let lines = stylize_dataset(&args.input, &args.out, &source, &params, seed, workers)?;
            emit(json!({
                "images": lines.len(),
                "seed": seed,
                "manifest": args.out.join("manifest.jsonl"),
            }))?;
        }
        Command::Eed(args) => {
            let mut preset = match args.preset {
                EedPresetName::EedMild => EEDPreset::mild(),
                EedPresetName::EedStrong => EEDPreset::strong(),
            };
            if let Some(v) = args.kappa {
                preset.kappa = v;
            }
            if let Some(v) = args.kernel_size {
                preset.kernel_size = v;
            }
            if let Some(v) = args.sigma {
                preset.sigma = v;
            }
            if let Some(v) = args.steps {
                preset.steps = v;
            }
            if let Some(v) = args.tau {
                preset.tau = v;
            }
            let images = eed_dataset(&args.input, &args.out, &preset, workers)?;
            emit(json!({ "images": images }))?;
        }
        Command::Shuffle(args) => {
            let seed = resolve_seed(args.seed, &config);
            let lines = shuffle_dataset(
                &args.images,
                &args.labels,
                &args.out,
                &ShuffleSpec { k: args.patches },
                seed,
                workers,
            )?;
            emit(json!({
                "images": lines.len(),
                "seed": seed,
                "manifest": args.out.join("manifest.jsonl"),
            }))?;
        }
        Command::Corrupt(args) => {
            let specs = if args.grid {
                corruption_grid(args.extended)
            } else {
                let name = args.family.as_deref().expect("clap enforces --family");
                let family = CorruptionFamily::from_name(name).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "unknown corruption family {name:?} (expected contrast, uniform-noise, \
                         noise-on-reduced-contrast, low-pass, high-pass or phase-noise)"
                    ))
                })?;
                vec![CorruptionSpec {
                    family,
                    level: args.level.expect("clap enforces --level"),
                }]
            };
            let means = match args.means.map(|m| m.0).or(config.means.clone()) {
                Some(values) => DatasetMeans::new(values)?,
                None => DatasetMeans::cityscapes(),
            };
            let ctx = CorruptionContext {
                means,
                reduced_contrast: args
                    .reduced_contrast
                    .or(config.reduced_contrast)
                    .unwrap_or(0.3),
            };
            let seed = resolve_seed(args.seed, &config);
            let lines = corrupt_dataset(&args.input, &args.out, &specs, &ctx, seed, workers)?;
            emit(json!({
                "outputs": lines.len(),
                "seed": seed,
                "manifest": args.out.join("manifest.jsonl"),
            }))?;
        }
        Command::Grid(args) => {
            for spec in corruption_grid(args.extended) {
                emit(json!({
                    "family": spec.family.name(),
                    "level": spec.level,
                }))?;
            }
        }
        Command::Score(score) => match score.command {
            ScoreCommand::Miou(args) => {
                let cm = confusion_over_dirs(&args.predictions, &args.ground_truth, args.classes)?;
                let per_class = per_class_iou(&cm);
                emit(json!({
                    "classes": args.classes,
                    "evaluated_classes": per_class.iter().filter(|c| c.is_some()).count(),
                    "miou": miou(&cm)?,
                    "pixel_accuracy": pixel_accuracy(&cm)?,
                    "per_class_iou": per_class,
                }))?;
            }
            ScoreCommand::Cdsb(args) => {
                let (s_norm, t_norm) = match args.dataset {
                    Some(dataset) => dataset.cue_norms(),
                    None => (
                        args.shape_norm.expect("clap enforces --shape-norm"),
                        args.texture_norm.expect("clap enforces --texture-norm"),
                    ),
                };
                let inputs = CDSBInputs {
                    iou_shape: args.iou_shape,
                    iou_texture: args.iou_texture,
                    s_norm,
                    t_norm,
                };
                emit(json!({
                    "iou_shape": inputs.iou_shape,
                    "iou_texture": inputs.iou_texture,
                    "shape_norm": inputs.s_norm,
                    "texture_norm": inputs.t_norm,
                    "cdsb": cdsb(&inputs)?,
                }))?;
            }
            ScoreCommand::Robustness(args) => {
                #[derive(serde::Deserialize)]
                #[serde(deny_unknown_fields)]
                struct TableFile {
                    miou_original: f64,
                    families: BTreeMap<String, Vec<f64>>,
                }
                let text = std::fs::read_to_string(&args.table).map_err(|source| Error::Io {
                    path: args.table.clone(),
                    source,
                })?;
                let file: TableFile = serde_json::from_str(&text).map_err(|e| {
                    Error::InvalidParameter(format!("table {}: {e}", args.table.display()))
                })?;
                let table =
                    RobustnessTable::new(file.families.into_iter().collect(), file.miou_original)?;
                emit(json!({
                    "families": table.families().len(),
                    "miou_original": table.miou_original(),
                    "robustness_score": robustness_score(&table)?,
                }))?;
            }
            ScoreCommand::Accrel(args) => {
                let stylized =
                    confusion_over_dirs(&args.stylized, &args.ground_truth, args.classes)?;
                let clean = confusion_over_dirs(&args.clean, &args.ground_truth, args.classes)?;
                let acc_stylized = pixel_accuracy(&stylized)?;
                let acc_clean = pixel_accuracy(&clean)?;
                emit(json!({
                    "acc_stylized": acc_stylized,
                    "acc_clean": acc_clean,
                    "acc_rel": acc_rel(acc_stylized, acc_clean)?,
                }))?;
            }
        },
    }
    Ok(())
}

/// 3 for I/O and codec failures, 4 for anything the inputs got wrong.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Decode { .. } | Error::Encode { .. } => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
