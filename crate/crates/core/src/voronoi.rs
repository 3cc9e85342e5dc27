//! Random Voronoi partitions of the pixel grid.
//!
//! Sites live on integer pixel coordinates. Every pixel belongs to the
//! site minimizing the squared Euclidean distance
//!
//! ```text
//! d2(p, s) = (px - sx)^2 + (py - sy)^2
//! ```
//!
//! with exact integer arithmetic; distance ties go to the site with the
//! lowest index, so a partition is a pure function of the ordered site
//! list. Assignment prunes candidates per image tile (a site whose
//! nearest possible distance to the tile exceeds some site's farthest
//! possible distance can never win inside it), which keeps the scan near
//! O(pixels) for realistic site counts while remaining exactly equal to
//! the brute-force scan.

use crate::error::{Error, Result};
use crate::seed::SeedStream;

/// A Voronoi site on integer pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

/// Per-cell boolean decisions (e.g. "re-texture this cell").
pub type CellFlags = Vec<bool>;

/// A complete pixel-to-cell assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoronoiPartition {
    width: usize,
    height: usize,
    n_sites: usize,
    cells: Vec<u32>,
}

impl VoronoiPartition {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Cell index of a pixel.
    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.cells[y * self.width + x]
    }

    /// Row-major cell indices, one per pixel.
    #[inline]
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }
}

/// Sample `n` distinct sites uniformly over the pixel grid by rejection.
///
/// Draw order is fixed (x then y per attempt; duplicates are redrawn), so
/// a given stream state always yields the same sites.
pub fn sample_sites(
    stream: &mut SeedStream,
    n: usize,
    width: usize,
    height: usize,
) -> Result<Vec<Site>> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "cannot place sites on a {width}x{height} grid"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "at least one site is required".into(),
        ));
    }
    if n > width * height {
        return Err(Error::TooManySites {
            requested: n,
            available: width * height,
        });
    }
    let mut taken = vec![false; width * height];
    let mut sites = Vec::with_capacity(n);
    while sites.len() < n {
        let x = stream.next_below(width as u64) as usize;
        let y = stream.next_below(height as u64) as usize;
        let slot = y * width + x;
        if !taken[slot] {
            taken[slot] = true;
            sites.push(Site { x, y });
        }
    }
    Ok(sites)
}

/// Assign every pixel of a `width` x `height` grid to its nearest site.
pub fn assign_cells(sites: &[Site], width: usize, height: usize) -> Result<VoronoiPartition> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot build a partition from zero sites".into(),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "cannot partition a {width}x{height} grid"
        )));
    }
    for (i, s) in sites.iter().enumerate() {
        if s.x >= width || s.y >= height {
            return Err(Error::InvalidParameter(format!(
                "site {i} at ({}, {}) lies outside the {width}x{height} grid",
                s.x, s.y
            )));
        }
    }

    const TILE: usize = 32;
    let mut cells = vec![0u32; width * height];
    let mut candidates: Vec<(u32, i64, i64)> = Vec::with_capacity(sites.len());

    let mut ty = 0;
    while ty < height {
        let ty1 = (ty + TILE).min(height) - 1;
        let mut tx = 0;
        while tx < width {
            let tx1 = (tx + TILE).min(width) - 1;

            // Upper bound: some site is reachable from every pixel of the
            // tile within its farthest-corner distance.
            let mut bound = i64::MAX;
            for s in sites {
                let fx = (s.x as i64 - tx as i64).abs().max((s.x as i64 - tx1 as i64).abs());
                let fy = (s.y as i64 - ty as i64).abs().max((s.y as i64 - ty1 as i64).abs());
                bound = bound.min(fx * fx + fy * fy);
            }

            // Candidates: sites whose nearest-point distance to the tile
            // does not exceed the bound. `<=` keeps exact tie competitors.
            candidates.clear();
            for (i, s) in sites.iter().enumerate() {
                let dx = (tx as i64 - s.x as i64).max(s.x as i64 - tx1 as i64).max(0);
                let dy = (ty as i64 - s.y as i64).max(s.y as i64 - ty1 as i64).max(0);
                if dx * dx + dy * dy <= bound {
                    candidates.push((i as u32, s.x as i64, s.y as i64));
                }
            }

            for y in ty..=ty1 {
                for x in tx..=tx1 {
                    let mut best_id = candidates[0].0;
                    let mut best_d = {
                        let dx = x as i64 - candidates[0].1;
                        let dy = y as i64 - candidates[0].2;
                        dx * dx + dy * dy
                    };
                    // Candidates are in ascending site order and the
                    // comparison is strict, so ties keep the lowest index.
                    for &(id, sx, sy) in &candidates[1..] {
                        let dx = x as i64 - sx;
                        let dy = y as i64 - sy;
                        let d = dx * dx + dy * dy;
                        if d < best_d {
                            best_d = d;
                            best_id = id;
                        }
                    }
                    cells[y * width + x] = best_id;
                }
            }
            tx += TILE;
        }
        ty += TILE;
    }

    Ok(VoronoiPartition {
        width,
        height,
        n_sites: sites.len(),
        cells,
    })
}

/// Draw one independent Bernoulli(`p`) flag per cell.
pub fn select_stylized(stream: &mut SeedStream, n_cells: usize, p: f64) -> Result<CellFlags> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "stylization probability must lie in [0, 1], got {p}"
        )));
    }
    Ok((0..n_cells).map(|_| stream.bernoulli(p)).collect())
}
