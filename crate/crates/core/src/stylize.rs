//! Per-channel statistics alignment ("pixel AdaIN") and cell compositing.
//!
//! A stylized layer re-textures the whole content frame by aligning each
//! channel's first two moments to those of a style image:
//!
//! ```text
//! z = sigma_style * (v - mu_content) / max(sigma_content, 1e-6) + mu_style
//! ```
//!
//! so the layer's pre-clip mean and standard deviation equal the style's
//! exactly (up to floating-point error) whenever the content channel is
//! not degenerate. Layers are then clipped to `[0, 1]` and composited
//! into the content on a per-Voronoi-cell basis: flagged cells take the
//! layer pixels, the rest keep the original. Label masks are never
//! touched by any of this.
//!
//! Two layer backends exist: `Builtin` computes the alignment from a pool
//! of style PNGs; `Prerendered` looks up an externally generated layer
//! per (content, style) pair, for swapping in a heavier style-transfer
//! model without changing the sampling or compositing logic.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{load_png, ImageBuffer};
use crate::voronoi::{CellFlags, VoronoiPartition};

/// Divisor floor that keeps the alignment defined on near-constant channels.
pub const STD_FLOOR: f64 = 1e-6;

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl ChannelStats {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() || means.is_empty() {
            return Err(Error::InvalidParameter(
                "channel statistics need one (mean, std) pair per channel".into(),
            ));
        }
        if stds.iter().any(|s| *s < 0.0 || !s.is_finite()) || means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::InvalidParameter(
                "channel statistics must be finite with non-negative std".into(),
            ));
        }
        Ok(ChannelStats { means, stds })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.means.len()
    }

    #[inline]
    pub fn mean(&self, ch: usize) -> f64 {
        self.means[ch]
    }

    #[inline]
    pub fn std(&self, ch: usize) -> f64 {
        self.stds[ch]
    }
}

/// Mean and population standard deviation of every channel.
pub fn channel_stats(image: &ImageBuffer) -> ChannelStats {
    let c = image.channels();
    let n = (image.width() * image.height()) as f64;
    let mut means = vec![0.0; c];
    let mut stds = vec![0.0; c];
    for ch in 0..c {
        let mut sum = 0.0;
        for v in image.data()[ch..].iter().step_by(c) {
            sum += v;
        }
        let mean = sum / n;
        let mut ss = 0.0;
        for v in image.data()[ch..].iter().step_by(c) {
            let d = v - mean;
            ss += d * d;
        }
        means[ch] = mean;
        stds[ch] = (ss / n).sqrt();
    }
    ChannelStats { means, stds }
}

/// Align the content's per-channel moments to the style's. No clipping:
/// callers that need a displayable layer clip afterwards.
pub fn align_statistics(
    content: &ImageBuffer,
    content_stats: &ChannelStats,
    style_stats: &ChannelStats,
) -> Result<ImageBuffer> {
    let c = content.channels();
    if content_stats.channels() != c || style_stats.channels() != c {
        return Err(Error::InvalidDimensions(format!(
            "statistics cover {} / {} channels but the content has {}",
            content_stats.channels(),
            style_stats.channels(),
            c
        )));
    }
    let mut out = content.clone();
    for ch in 0..c {
        let scale = style_stats.std(ch) / content_stats.std(ch).max(STD_FLOOR);
        let c_mean = content_stats.mean(ch);
        let s_mean = style_stats.mean(ch);
        for v in out.data_mut()[ch..].iter_mut().step_by(c) {
            *v = scale * (*v - c_mean) + s_mean;
        }
    }
    Ok(out)
}

/// Where stylized layers come from.
#[derive(Debug)]
pub enum StyleSource {
    /// Statistics alignment against a pool of style images.
    Builtin(StylePool),
    /// Externally generated layers on disk, one PNG per
    /// `<dir>/<content_id>/<style_id>.png`.
    Prerendered { dir: PathBuf },
}

impl StyleSource {
    /// Style ids available for one content image, in sampling order.
    pub fn style_ids(&self, content_id: &str) -> Result<Vec<String>> {
        match self {
            StyleSource::Builtin(pool) => Ok(pool.ids().to_vec()),
            StyleSource::Prerendered { dir } => {
                let sub = dir.join(content_id);
                let ids = png_stems(&sub)?;
                if ids.is_empty() {
                    return Err(Error::EmptyStylePool(format!(
                        "no prerendered layers under {}",
                        sub.display()
                    )));
                }
                Ok(ids)
            }
        }
    }

    /// Produce the full-frame stylized layer for one (content, style) pair,
    /// clipped to `[0, 1]` and shaped exactly like the content.
    pub fn make_layer(
        &self,
        content: &ImageBuffer,
        content_stats: &ChannelStats,
        content_id: &str,
        style_id: &str,
    ) -> Result<ImageBuffer> {
        match self {
            StyleSource::Builtin(pool) => {
                let style_stats = pool.stats(style_id).ok_or_else(|| Error::MissingStyle {
                    content_id: content_id.to_string(),
                    style_id: style_id.to_string(),
                })?;
                let mut layer = align_statistics(content, content_stats, style_stats)?;
                layer.clip_in_place();
                Ok(layer)
            }
            StyleSource::Prerendered { dir } => {
                let path = dir.join(content_id).join(format!("{style_id}.png"));
                if !path.is_file() {
                    return Err(Error::MissingStyle {
                        content_id: content_id.to_string(),
                        style_id: style_id.to_string(),
                    });
                }
                let layer = load_png(&path)?;
                if layer.width() != content.width()
                    || layer.height() != content.height()
                    || layer.channels() != content.channels()
                {
                    return Err(Error::InvalidDimensions(format!(
                        "prerendered layer {} is {}x{}x{} but the content is {}x{}x{}",
                        path.display(),
                        layer.width(),
                        layer.height(),
                        layer.channels(),
                        content.width(),
                        content.height(),
                        content.channels()
                    )));
                }
                Ok(layer)
            }
        }
    }
}

/// A directory of style PNGs with their statistics precomputed once.
#[derive(Debug)]
pub struct StylePool {
    ids: Vec<String>,
    stats: HashMap<String, ChannelStats>,
}

impl StylePool {
    /// Load every `*.png` in `dir` (non-recursive), sorted by file stem so
    /// the pool order, and therefore style sampling, is reproducible.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut entries: Vec<(String, PathBuf)> = Vec::new();
        let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in rd {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("png") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    entries.push((stem.to_string(), path.clone()));
                }
            }
        }
        if entries.is_empty() {
            return Err(Error::EmptyStylePool(format!(
                "no .png style images in {}",
                dir.display()
            )));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));

        let mut ids = Vec::with_capacity(entries.len());
        let mut stats = HashMap::with_capacity(entries.len());
        for (id, path) in entries {
            let img = load_png(&path)?;
            stats.insert(id.clone(), channel_stats(&img));
            ids.push(id);
        }
        Ok(StylePool { ids, stats })
    }

    /// Pool built from in-memory statistics; used by tests and callers
    /// that already have the style images decoded.
    pub fn from_stats(entries: Vec<(String, ChannelStats)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyStylePool("empty in-memory pool".into()));
        }
        let mut ids: Vec<String> = entries.iter().map(|(id, _)| id.clone()).collect();
        ids.sort();
        let stats = entries.into_iter().collect();
        Ok(StylePool { ids, stats })
    }

    #[inline]
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn stats(&self, id: &str) -> Option<&ChannelStats> {
        self.stats.get(id)
    }
}

fn png_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems = Vec::new();
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

/// Merge stylized layers into the content along a Voronoi partition.
///
/// `cell_layers[i]` must be present exactly when `flags[i]` is set; a
/// flagged pixel copies the sample from its cell's layer, everything else
/// keeps the content sample. Pure pixel copying, so p = 0 reproduces the
/// content bit for bit.
pub fn composite(
    content: &ImageBuffer,
    partition: &VoronoiPartition,
    flags: &CellFlags,
    cell_layers: &[Option<&ImageBuffer>],
) -> Result<ImageBuffer> {
    let (w, h, c) = (content.width(), content.height(), content.channels());
    if partition.width() != w || partition.height() != h {
        return Err(Error::InvalidDimensions(format!(
            "partition is {}x{} but the content is {w}x{h}",
            partition.width(),
            partition.height()
        )));
    }
    if flags.len() != partition.n_sites() || cell_layers.len() != partition.n_sites() {
        return Err(Error::InvalidParameter(format!(
            "expected {} flags and layers, got {} and {}",
            partition.n_sites(),
            flags.len(),
            cell_layers.len()
        )));
    }
    for (i, (&flag, layer)) in flags.iter().zip(cell_layers).enumerate() {
        match layer {
            Some(l) if flag => {
                if l.width() != w || l.height() != h || l.channels() != c {
                    return Err(Error::InvalidDimensions(format!(
                        "layer for cell {i} is {}x{}x{}, content is {w}x{h}x{c}",
                        l.width(),
                        l.height(),
                        l.channels()
                    )));
                }
            }
            None if !flag => {}
            Some(_) => {
                return Err(Error::InvalidParameter(format!(
                    "cell {i} is not stylized but a layer was supplied"
                )))
            }
            None => {
                return Err(Error::InvalidParameter(format!(
                    "cell {i} is stylized but no layer was supplied"
                )))
            }
        }
    }

    let mut out = content.clone();
    for y in 0..h {
        for x in 0..w {
            let cell = partition.cell(x, y) as usize;
            if flags[cell] {
                let layer = cell_layers[cell].expect("validated above");
                for ch in 0..c {
                    out.set(x, y, ch, layer.get(x, y, ch));
                }
            }
        }
    }
    Ok(out)
}
