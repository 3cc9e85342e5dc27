//! Separable convolution with mirror boundaries.
//!
//! The boundary rule is reflect-without-repeat: for a row `a b c d` the
//! virtual extension reads `... c b | a b c d | c b ...`, i.e. index `-1`
//! maps to `1` and index `n` maps to `n - 2`. Combined with unit-sum
//! kernels this keeps constants exactly constant and is symmetric, so
//! blurring commutes with horizontal/vertical flips.

use super::ImageBuffer;

/// Mirror an out-of-range index into `[0, n)` without repeating the edge
/// sample. Well-defined for any offset, including radii larger than `n`.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Normalized Gaussian taps for `±radius` around the center.
///
/// Weights are `exp(-k^2 / (2 sigma^2))` renormalized to unit sum, so the
/// truncation never loses mass.
pub fn gaussian_kernel_with_radius(sigma: f64, radius: usize) -> Vec<f64> {
    debug_assert!(sigma > 0.0);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut kernel: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|k| (-(k * k) as f64 * inv).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

/// Normalized Gaussian taps for an odd `size`-tap kernel (`size = 2r + 1`).
pub fn gaussian_kernel(sigma: f64, size: usize) -> Vec<f64> {
    debug_assert!(size % 2 == 1, "kernel size must be odd");
    gaussian_kernel_with_radius(sigma, size / 2)
}

/// Separable convolution of every channel with the same 1-D kernel.
pub(crate) fn convolve_separable(image: &ImageBuffer, kernel: &[f64]) -> ImageBuffer {
    let mut tmp = image.same_shape_zeroed();
    let mut out = image.same_shape_zeroed();
    convolve_separable_into(image, kernel, &mut tmp, &mut out);
    out
}

/// Scratch-reusing variant for hot loops; `tmp` and `out` must already have
/// the shape of `image`.
pub(crate) fn convolve_separable_into(
    image: &ImageBuffer,
    kernel: &[f64],
    tmp: &mut ImageBuffer,
    out: &mut ImageBuffer,
) {
    debug_assert_eq!(kernel.len() % 2, 1);
    let (w, h, c) = (image.width(), image.height(), image.channels());
    debug_assert_eq!(tmp.data().len(), image.data().len());
    debug_assert_eq!(out.data().len(), image.data().len());
    let r = (kernel.len() / 2) as isize;
    let row_len = w * c;

    // Horizontal pass: rows are independent.
    {
        let src = image.data();
        let dst = tmp.data_mut();
        use rayon::prelude::*;
        dst.par_chunks_mut(row_len).enumerate().for_each(|(y, row)| {
            let src_row = &src[y * row_len..(y + 1) * row_len];
            for x in 0..w {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for (k, &wk) in kernel.iter().enumerate() {
                        let sx = reflect_index(x as isize + k as isize - r, w);
                        acc += wk * src_row[sx * c + ch];
                    }
                    row[x * c + ch] = acc;
                }
            }
        });
    }

    // Vertical pass: output rows are independent, each reads a window of
    // `tmp` rows.
    {
        let src = tmp.data();
        let dst = out.data_mut();
        use rayon::prelude::*;
        dst.par_chunks_mut(row_len).enumerate().for_each(|(y, row)| {
            for (k, &wk) in kernel.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - r, h);
                let src_row = &src[sy * row_len..(sy + 1) * row_len];
                if k == 0 {
                    for (d, s) in row.iter_mut().zip(src_row) {
                        *d = wk * s;
                    }
                } else {
                    for (d, s) in row.iter_mut().zip(src_row) {
                        *d += wk * s;
                    }
                }
            }
        });
    }
}
