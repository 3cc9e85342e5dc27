//! Input builders shared by the benchmark targets.

use cuebias_core::ImageBuffer;

/// Deterministic pseudo-noise in [0, 1), independent of the library RNG.
fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

/// A noise image in [0, 1]; worst-case content for most kernels.
pub fn noise_image(width: usize, height: usize, channels: usize, seed: u64) -> ImageBuffer {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(13);
    let mut img = ImageBuffer::new(width, height, channels).unwrap();
    for v in img.data_mut() {
        *v = lcg(&mut state);
    }
    img
}

/// Smooth gradients plus gentle texture: closer to the photographic
/// content the kernels see in practice.
pub fn structured_image(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(7);
    let mut img = ImageBuffer::new(width, height, 3).unwrap();
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 / width as f64, y as f64 / height as f64);
            for ch in 0..3 {
                let wave = ((fx * 3.0 + ch as f64 * 0.25) * std::f64::consts::TAU).sin()
                    * ((fy * 2.0) * std::f64::consts::TAU).cos();
                let v = 0.5 + 0.35 * wave + 0.06 * (lcg(&mut state) - 0.5);
                img.set(x, y, ch, v.clamp(0.0, 1.0));
            }
        }
    }
    img
}
