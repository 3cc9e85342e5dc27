//! Bilinear resampling with half-pixel-center alignment.

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Linear interpolation whose result is clamped into the interval spanned
/// by its endpoints, so rounding can never overshoot either sample.
#[inline]
fn lerp_clamped(a: f64, b: f64, t: f64) -> f64 {
    (a + t * (b - a)).clamp(a.min(b), a.max(b))
}

/// Bilinear resize using half-pixel sample centers.
///
/// The source coordinate of output pixel `o` along an axis is
/// `(o + 0.5) * src / dst - 0.5`, clamped into `[0, src - 1]` so border
/// pixels are repeated rather than extrapolated. Because every output is
/// a clamped convex blend of four source samples, the output range is
/// contained in the source range, and resizing to the identical size
/// reproduces the input exactly.
pub fn resize_bilinear(image: &ImageBuffer, new_width: usize, new_height: usize) -> Result<ImageBuffer> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "target dimensions must be positive, got {new_width}x{new_height}"
        )));
    }
    let (sw, sh, c) = (image.width(), image.height(), image.channels());
    let mut out = ImageBuffer::new(new_width, new_height, c)?;

    let scale_x = sw as f64 / new_width as f64;
    let scale_y = sh as f64 / new_height as f64;

    // Precompute the per-axis source offsets and fractions.
    let xs: Vec<(usize, usize, f64)> = (0..new_width)
        .map(|ox| axis_coords(ox, scale_x, sw))
        .collect();
    let ys: Vec<(usize, usize, f64)> = (0..new_height)
        .map(|oy| axis_coords(oy, scale_y, sh))
        .collect();

    for (oy, &(y0, y1, ty)) in ys.iter().enumerate() {
        for (ox, &(x0, x1, tx)) in xs.iter().enumerate() {
            for ch in 0..c {
                let top = lerp_clamped(image.get(x0, y0, ch), image.get(x1, y0, ch), tx);
                let bottom = lerp_clamped(image.get(x0, y1, ch), image.get(x1, y1, ch), tx);
                out.set(ox, oy, ch, lerp_clamped(top, bottom, ty));
            }
        }
    }
    Ok(out)
}

#[inline]
fn axis_coords(o: usize, scale: f64, src: usize) -> (usize, usize, f64) {
    let pos = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(src - 1);
    (i0, i1, pos - i0 as f64)
}
