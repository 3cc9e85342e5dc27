//! Voronoi patch shuffling.
//!
//! The image plane is split into `k` random Voronoi cells, a random
//! permutation `pi` of the cells is drawn, and every pixel `x` in cell
//! `i` is refilled from the input at
//!
//! ```text
//! src(x) = clamp(x + site[pi(i)] - site[i])
//! ```
//!
//! i.e. each cell's window is translated to where its partner cell sits,
//! destroying global shape while keeping local texture statistics. The
//! label mask is moved through exactly the same source map, so
//! (image, label) stay pixel-aligned. Clamping is per axis, so sources
//! never leave the image.
//!
//! Draw order from the stream is fixed: first the `k` sites (exactly as
//! [`sample_sites`] consumes them), then the permutation.

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, LabelMask};
use crate::seed::SeedStream;
use crate::voronoi::{assign_cells, sample_sites, Site};

/// Parameters of one shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShuffleSpec {
    /// Number of Voronoi cells ("patches").
    pub k: usize,
}

/// Everything a shuffle produced, including what a manifest needs to
/// replay it.
#[derive(Debug, Clone)]
pub struct ShuffleOutcome {
    pub image: ImageBuffer,
    pub labels: LabelMask,
    pub sites: Vec<Site>,
    pub permutation: Vec<usize>,
}

/// Shuffle an image and its label mask along one random Voronoi partition.
pub fn shuffle_voronoi(
    image: &ImageBuffer,
    labels: &LabelMask,
    spec: &ShuffleSpec,
    stream: &mut SeedStream,
) -> Result<ShuffleOutcome> {
    Ok(shuffle_voronoi_traced(image, labels, spec, stream)?.0)
}

/// [`shuffle_voronoi`] plus the per-pixel source map (row-major input
/// indices), for callers that want to audit the rearrangement.
pub fn shuffle_voronoi_traced(
    image: &ImageBuffer,
    labels: &LabelMask,
    spec: &ShuffleSpec,
    stream: &mut SeedStream,
) -> Result<(ShuffleOutcome, Vec<usize>)> {
    let (w, h) = (image.width(), image.height());
    if labels.width() != w || labels.height() != h {
        return Err(Error::InvalidDimensions(format!(
            "label mask is {}x{} but the image is {w}x{h}",
            labels.width(),
            labels.height()
        )));
    }
    let sites = sample_sites(stream, spec.k, w, h)?;
    let partition = assign_cells(&sites, w, h)?;
    let mut permutation: Vec<usize> = (0..spec.k).collect();
    stream.shuffle(&mut permutation);

    let mut out_image = image.same_shape_zeroed();
    let mut out_labels = labels.clone();
    let mut trace = vec![0usize; w * h];
    let c = image.channels();

    for y in 0..h {
        for x in 0..w {
            let cell = partition.cell(x, y) as usize;
            let here = sites[cell];
            let there = sites[permutation[cell]];
            let sx = (x as isize + there.x as isize - here.x as isize)
                .clamp(0, w as isize - 1) as usize;
            let sy = (y as isize + there.y as isize - here.y as isize)
                .clamp(0, h as isize - 1) as usize;
            for ch in 0..c {
                out_image.set(x, y, ch, image.get(sx, sy, ch));
            }
            out_labels.set(x, y, labels.get(sx, sy));
            trace[y * w + x] = sy * w + sx;
        }
    }

    Ok((
        ShuffleOutcome {
            image: out_image,
            labels: out_labels,
            sites,
            permutation,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker_image(w: usize, h: usize) -> ImageBuffer {
        let mut img = ImageBuffer::new(w, h, 3).unwrap();
        for y in 0..h {
            for x in 0..w {
                let v = ((x + y) % 2) as f64;
                for ch in 0..3 {
                    img.set(x, y, ch, v * (ch as f64 + 1.0) / 3.0);
                }
            }
        }
        img
    }

    fn gradient_labels(w: usize, h: usize) -> LabelMask {
        LabelMask::from_vec(w, h, (0..w * h).map(|i| (i % 23) as u8).collect()).unwrap()
    }

    #[test]
    fn single_patch_is_the_identity() {
        let img = checker_image(9, 7);
        let labels = gradient_labels(9, 7);
        let mut s = SeedStream::new(5);
        let out = shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 1 }, &mut s).unwrap();
        assert_eq!(out.image.data(), img.data());
        assert_eq!(out.labels, labels);
        assert_eq!(out.permutation, vec![0]);
    }

    #[test]
    fn output_follows_the_translation_formula() {
        let img = checker_image(24, 18);
        let labels = gradient_labels(24, 18);
        let mut s = SeedStream::new(99);
        let (out, trace) =
            shuffle_voronoi_traced(&img, &labels, &ShuffleSpec { k: 6 }, &mut s).unwrap();

        // Re-derive every source pixel independently from the recorded
        // sites and permutation.
        let partition = assign_cells(&out.sites, 24, 18).unwrap();
        for y in 0..18usize {
            for x in 0..24usize {
                let cell = partition.cell(x, y) as usize;
                let dx = out.sites[out.permutation[cell]].x as isize
                    - out.sites[cell].x as isize;
                let dy = out.sites[out.permutation[cell]].y as isize
                    - out.sites[cell].y as isize;
                let sx = (x as isize + dx).clamp(0, 23) as usize;
                let sy = (y as isize + dy).clamp(0, 17) as usize;
                assert_eq!(trace[y * 24 + x], sy * 24 + sx);
                for ch in 0..3 {
                    assert_eq!(out.image.get(x, y, ch), img.get(sx, sy, ch));
                }
                assert_eq!(out.labels.get(x, y), labels.get(sx, sy));
            }
        }
    }

    #[test]
    fn image_and_labels_stay_aligned() {
        // Make the label a function of the pixel value; if both move
        // through the same source map the relation survives shuffling.
        let (w, h) = (20, 20);
        let mut img = ImageBuffer::new(w, h, 1).unwrap();
        let mut ids = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let id = ((x / 5) + 4 * (y / 5)) as u8;
                img.set(x, y, 0, id as f64 / 16.0);
                ids[y * w + x] = id;
            }
        }
        let labels = LabelMask::from_vec(w, h, ids).unwrap();
        for k in [4usize, 9, 16] {
            let mut s = SeedStream::new(k as u64 * 31 + 7);
            let out = shuffle_voronoi(&img, &labels, &ShuffleSpec { k }, &mut s).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let expect = out.labels.get(x, y) as f64 / 16.0;
                    assert_eq!(out.image.get(x, y, 0), expect, "misaligned at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_outcome() {
        let img = checker_image(15, 11);
        let labels = gradient_labels(15, 11);
        let mut a = SeedStream::new(2);
        let mut b = SeedStream::new(2);
        let out_a = shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 8 }, &mut a).unwrap();
        let out_b = shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 8 }, &mut b).unwrap();
        assert_eq!(out_a.image.data(), out_b.image.data());
        assert_eq!(out_a.labels, out_b.labels);
        assert_eq!(out_a.sites, out_b.sites);
        assert_eq!(out_a.permutation, out_b.permutation);
    }

    #[test]
    fn permutation_is_always_a_bijection() {
        let img = checker_image(30, 30);
        let labels = gradient_labels(30, 30);
        for seed in 0..20 {
            let mut s = SeedStream::new(seed);
            let out = shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 64 }, &mut s).unwrap();
            let mut sorted = out.permutation.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let img = checker_image(4, 4);
        let labels = gradient_labels(4, 4);
        let mut s = SeedStream::new(0);
        assert!(shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 0 }, &mut s).is_err());
        assert!(shuffle_voronoi(&img, &labels, &ShuffleSpec { k: 17 }, &mut s).is_err());
        let small = gradient_labels(3, 4);
        assert!(shuffle_voronoi(&img, &small, &ShuffleSpec { k: 2 }, &mut s).is_err());
    }
}
