//! Deterministic batch runners over directories of PNG images.
//!
//! Every runner follows the same protocol: enumerate inputs (sorted by
//! content id), process each image on a worker pool with per-image seed
//! streams derived from the global seed, write outputs that mirror the
//! input layout, and emit a `manifest.jsonl` sorted by content id. Because
//! nothing depends on scheduling — each image folds its own id into the
//! seed and manifests are sorted before the final write — two runs with
//! the same inputs and seed produce byte-identical trees regardless of the
//! worker count.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corrupt::{apply, CorruptionContext, CorruptionFamily, CorruptionSpec};
use crate::eed::{eed_run, EEDPreset};
use crate::error::{Error, Result};
use crate::image::{
    load_label_png, load_png, resize_bilinear, save_label_png, save_png, ImageBuffer,
};
use crate::manifest::{
    write_jsonl, AugmentationRecord, CorruptLine, ShuffleLine, StylizeLine,
};
use crate::seed::{derive_seed, fnv1a64};
use crate::shuffle::{shuffle_voronoi, ShuffleSpec};
use crate::stylize::{channel_stats, composite, StyleSource};
use crate::voronoi::{assign_cells, sample_sites, select_stylized, Site, VoronoiPartition};

/// Per-image seed recorded in manifests: the global seed folded with the
/// content id. Individual draw streams additionally fold a purpose label
/// (see [`derive_seed`]), so this value plus the purpose names pin every
/// random choice a runner makes for one image.
pub fn image_seed(global_seed: u64, content_id: &str) -> u64 {
    global_seed ^ fnv1a64(content_id.as_bytes())
}

/// Purpose label of the seed stream a corruption draws from. Stochastic
/// families qualify the label with the severity so every grid cell gets an
/// independent stream; deterministic families never consume draws, but the
/// label keeps the derivation uniform.
pub fn corruption_stream_purpose(spec: &CorruptionSpec) -> String {
    match spec.family {
        CorruptionFamily::UniformNoise => format!("noise:{}", spec.level),
        CorruptionFamily::NoiseOnReducedContrast => format!("noise:reduced:{}", spec.level),
        CorruptionFamily::PhaseNoise => format!("phase:{}", spec.level),
        CorruptionFamily::Contrast | CorruptionFamily::LowPass | CorruptionFamily::HighPass => {
            spec.family.name().to_string()
        }
    }
}

/// Recursively list the PNG files under `dir` as `(content_id, path)`
/// pairs sorted by id. The content id is the path relative to `dir`
/// without the extension, `/`-separated, and doubles as the output-relative
/// stem, so output trees mirror input trees.
pub fn list_pngs(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.to_path_buf());
            let source = e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("directory walk failed"));
            Error::io(path, source)
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let is_png = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("png"));
        if !is_png {
            continue;
        }
        let rel = path
            .strip_prefix(dir)
            .expect("walked paths start with the walk root");
        let mut id = String::new();
        if let Some(parent) = rel.parent() {
            for comp in parent.components() {
                id.push_str(&comp.as_os_str().to_string_lossy());
                id.push('/');
            }
        }
        id.push_str(&path.file_stem().unwrap_or_default().to_string_lossy());
        entries.push((id, path.to_path_buf()));
    }
    entries.sort();
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidParameter(format!(
                "content id {:?} is ambiguous: {} and {}",
                pair[0].0,
                pair[0].1.display(),
                pair[1].1.display()
            )));
        }
    }
    if entries.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no PNG images found under {}",
            dir.display()
        )));
    }
    Ok(entries)
}

/// Build a worker pool; `None` uses one worker per logical CPU.
fn build_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))
}

/// Write an image under `root` at the `/`-separated relative path `rel`,
/// creating parent directories as needed.
fn save_output(image: &ImageBuffer, root: &Path, rel: &str) -> Result<PathBuf> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_png(image, &path)?;
    Ok(path)
}

/// Resize applied around stylization: optionally upscale before cells are
/// drawn, optionally downscale the composited result. Either side being
/// the identity size is fine (same-size resizes are exact copies).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResizeProtocol {
    /// Working size `(width, height)` the content is brought to first.
    pub up: Option<(usize, usize)>,
    /// Final size `(width, height)` the stylized frame is brought back to.
    pub down: Option<(usize, usize)>,
}

impl ResizeProtocol {
    fn validate(&self) -> Result<()> {
        for side in [self.up, self.down].into_iter().flatten() {
            if side.0 == 0 || side.1 == 0 {
                return Err(Error::InvalidDimensions(
                    "resize targets must be non-zero in both axes".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of one stylization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StylizeParams {
    /// Number of Voronoi cells per image.
    pub n: usize,
    /// Independent per-cell stylization probability.
    pub p: f64,
    pub resize: ResizeProtocol,
}

impl StylizeParams {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "at least one cell is required".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "stylization probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        self.resize.validate()
    }
}

/// Stylize one image: upscale, draw the partition / flags / style
/// assignment from purpose-specific streams, composite, downscale.
///
/// Draws happen on three independent streams (purposes `"sites"`,
/// `"flags"` and `"styles"`), so changing one parameter never shifts the
/// draws of the others. A style id is drawn for every cell — flagged or
/// not — which keeps the assignment independent of `p`: without
/// replacement when the pool has at least `n` styles, with replacement
/// otherwise. The returned record replays the output bit for bit via
/// [`replay_stylize`].
pub fn stylize_one(
    content: &ImageBuffer,
    content_id: &str,
    source: &StyleSource,
    params: &StylizeParams,
    global_seed: u64,
) -> Result<(ImageBuffer, AugmentationRecord)> {
    params.validate()?;
    let work = match params.resize.up {
        Some((w, h)) => resize_bilinear(content, w, h)?,
        None => content.clone(),
    };

    let mut sites_stream = derive_seed(global_seed, content_id, "sites");
    let sites = sample_sites(&mut sites_stream, params.n, work.width(), work.height())?;
    let partition = assign_cells(&sites, work.width(), work.height())?;

    let mut flags_stream = derive_seed(global_seed, content_id, "flags");
    let stylized = select_stylized(&mut flags_stream, params.n, params.p)?;

    let pool_ids = source.style_ids(content_id)?;
    let mut styles_stream = derive_seed(global_seed, content_id, "styles");
    let styles: Vec<String> = if pool_ids.len() >= params.n {
        styles_stream
            .sample_indices(pool_ids.len(), params.n)
            .into_iter()
            .map(|i| pool_ids[i].clone())
            .collect()
    } else {
        (0..params.n)
            .map(|_| pool_ids[styles_stream.next_below(pool_ids.len() as u64) as usize].clone())
            .collect()
    };

    let record = AugmentationRecord {
        content_id: content_id.to_string(),
        seed: image_seed(global_seed, content_id),
        n: params.n,
        p: params.p,
        sites: sites.iter().map(|s| (s.x, s.y)).collect(),
        styles,
        stylized,
    };
    let styled = render_record(&work, &partition, &record, source)?;
    let out = match params.resize.down {
        Some((w, h)) => resize_bilinear(&styled, w, h)?,
        None => styled,
    };
    Ok((out, record))
}

/// Regenerate a stylized output from its manifest record: no random draws,
/// every choice comes from the record. Given the same content image, style
/// source and resize protocol as the original run, the result is
/// bit-identical to it.
pub fn replay_stylize(
    content: &ImageBuffer,
    record: &AugmentationRecord,
    source: &StyleSource,
    resize: &ResizeProtocol,
) -> Result<ImageBuffer> {
    resize.validate()?;
    record.validate()?;
    let work = match resize.up {
        Some((w, h)) => resize_bilinear(content, w, h)?,
        None => content.clone(),
    };
    let sites: Vec<Site> = record.sites.iter().map(|&(x, y)| Site { x, y }).collect();
    let partition = assign_cells(&sites, work.width(), work.height())?;
    let styled = render_record(&work, &partition, record, source)?;
    match resize.down {
        Some((w, h)) => resize_bilinear(&styled, w, h),
        None => Ok(styled),
    }
}

/// Shared tail of the run and replay paths: build one layer per distinct
/// stylized style id and composite along the partition.
fn render_record(
    work: &ImageBuffer,
    partition: &VoronoiPartition,
    record: &AugmentationRecord,
    source: &StyleSource,
) -> Result<ImageBuffer> {
    let stats = channel_stats(work);
    let mut layers: HashMap<&str, ImageBuffer> = HashMap::new();
    for (style, &flag) in record.styles.iter().zip(&record.stylized) {
        if flag && !layers.contains_key(style.as_str()) {
            let layer = source.make_layer(work, &stats, &record.content_id, style)?;
            layers.insert(style, layer);
        }
    }
    let cell_layers: Vec<Option<&ImageBuffer>> = record
        .styles
        .iter()
        .zip(&record.stylized)
        .map(|(style, &flag)| flag.then(|| &layers[style.as_str()]))
        .collect();
    composite(work, partition, &record.stylized, &cell_layers)
}

/// Stylize every PNG under `input_dir` into `output_dir`, mirroring the
/// layout, and write `output_dir/manifest.jsonl` (one line per image,
/// sorted by content id). Returns the manifest lines.
pub fn stylize_dataset(
    input_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    source: &StyleSource,
    params: &StylizeParams,
    global_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<StylizeLine>> {
    params.validate()?;
    let entries = list_pngs(input_dir)?;
    let output_dir = output_dir.as_ref();
    let pool = build_pool(workers)?;
    let mut lines = pool.install(|| {
        entries
            .par_iter()
            .map(|(id, path)| {
                let content = load_png(path)?;
                let (styled, record) = stylize_one(&content, id, source, params, global_seed)?;
                let rel = format!("{id}.png");
                save_output(&styled, output_dir, &rel)?;
                Ok(StylizeLine {
                    record,
                    output_path: rel,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    lines.sort_by(|a, b| a.record.content_id.cmp(&b.record.content_id));
    write_jsonl(&lines, output_dir.join("manifest.jsonl"))?;
    Ok(lines)
}

/// Run edge-enhancing diffusion on every PNG under `input_dir`, mirroring
/// the layout into `output_dir`. Deterministic, so there is no manifest;
/// returns the number of images written.
pub fn eed_dataset(
    input_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    preset: &EEDPreset,
    workers: Option<usize>,
) -> Result<usize> {
    preset.validate()?;
    let entries = list_pngs(input_dir)?;
    let output_dir = output_dir.as_ref();
    let pool = build_pool(workers)?;
    pool.install(|| {
        entries
            .par_iter()
            .map(|(id, path)| {
                let image = load_png(path)?;
                let diffused = eed_run(&image, preset)?;
                save_output(&diffused, output_dir, &format!("{id}.png"))?;
                Ok(())
            })
            .collect::<Result<Vec<()>>>()
    })?;
    Ok(entries.len())
}

/// Patch-shuffle every image under `images_dir` together with its label
/// mask (the PNG at the same relative path under `labels_dir`). Outputs
/// land in `output_dir/images/...` and `output_dir/labels/...`; a
/// `manifest.jsonl` sorted by content id records each partition and
/// permutation. Per-image draws come from the purpose-`"shuffle"` stream.
pub fn shuffle_dataset(
    images_dir: impl AsRef<Path>,
    labels_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    spec: &ShuffleSpec,
    global_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<ShuffleLine>> {
    let entries = list_pngs(images_dir)?;
    let labels_dir = labels_dir.as_ref();
    let output_dir = output_dir.as_ref();
    let pool = build_pool(workers)?;
    let mut lines = pool.install(|| {
        entries
            .par_iter()
            .map(|(id, path)| {
                let image = load_png(path)?;
                let labels = load_label_png(labels_dir.join(format!("{id}.png")))?;
                let mut stream = derive_seed(global_seed, id, "shuffle");
                let outcome = shuffle_voronoi(&image, &labels, spec, &mut stream)?;
                save_output(&outcome.image, output_dir, &format!("images/{id}.png"))?;
                let label_path = output_dir.join(format!("labels/{id}.png"));
                if let Some(parent) = label_path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                save_label_png(&outcome.labels, &label_path)?;
                Ok(ShuffleLine {
                    content_id: id.clone(),
                    seed: image_seed(global_seed, id),
                    k: spec.k,
                    sites: outcome.sites.iter().map(|s| (s.x, s.y)).collect(),
                    permutation: outcome.permutation,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    lines.sort_by(|a, b| a.content_id.cmp(&b.content_id));
    write_jsonl(&lines, output_dir.join("manifest.jsonl"))?;
    Ok(lines)
}

/// Apply a set of corruption grid cells to every PNG under `input_dir`.
/// Each output lands at `output_dir/<family>/<level>/<content_id>.png`,
/// and `output_dir/manifest.jsonl` lists every output sorted by content id
/// (grid order within an id). Stochastic cells draw from per-image,
/// per-cell streams (see [`corruption_stream_purpose`]).
pub fn corrupt_dataset(
    input_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    specs: &[CorruptionSpec],
    ctx: &CorruptionContext,
    global_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<CorruptLine>> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter(
            "the corruption grid is empty".into(),
        ));
    }
    let entries = list_pngs(input_dir)?;
    let output_dir = output_dir.as_ref();
    let pool = build_pool(workers)?;
    let per_entry = pool.install(|| {
        entries
            .par_iter()
            .map(|(id, path)| {
                let image = load_png(path)?;
                let mut lines = Vec::with_capacity(specs.len());
                for spec in specs {
                    let purpose = corruption_stream_purpose(spec);
                    let mut stream = derive_seed(global_seed, id, &purpose);
                    let corrupted = apply(&image, spec, ctx, &mut stream)?;
                    let rel = format!("{}/{}/{id}.png", spec.family.name(), spec.level);
                    save_output(&corrupted, output_dir, &rel)?;
                    lines.push(CorruptLine {
                        content_id: id.clone(),
                        family: spec.family.name().to_string(),
                        level: spec.level,
                        seed: image_seed(global_seed, id),
                        output_path: rel,
                    });
                }
                Ok(lines)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut lines: Vec<CorruptLine> = per_entry.into_iter().flatten().collect();
    lines.sort_by(|a, b| a.content_id.cmp(&b.content_id));
    write_jsonl(&lines, output_dir.join("manifest.jsonl"))?;
    Ok(lines)
}
