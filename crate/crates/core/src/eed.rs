//! Edge-enhancing anisotropic diffusion (EED).
//!
//! The image evolves under `du/dt = div(D(J) grad u)` where the diffusion
//! tensor `D` is built from the structure tensor
//!
//! ```text
//! J(u) = sum_channels  grad(u_sigma) grad(u_sigma)^T,
//! ```
//!
//! `u_sigma` being the image pre-smoothed by a small fixed-width Gaussian.
//! With eigendecomposition `J = mu1 v1 v1^T + mu2 v2 v2^T` (`mu1 >= mu2`,
//! `v1` pointing across the strongest local edge), `D` keeps the same
//! eigenvectors but swaps the eigenvalues for
//!
//! ```text
//! lambda1 = g(mu1)      (across the edge: shut down as contrast grows)
//! lambda2 = 1           (along the edge: full diffusion)
//! g(s)    = 1 - exp(-3.31488 / (s / kappa^2)^4),   g(s) = 1 for s <= 0
//! ```
//!
//! so texture diffuses away while region contours survive and sharpen.
//! `kappa` sets the contrast scale: `g(kappa^2) ~ 0.964`, with a steep
//! drop beyond it.
//!
//! Time stepping is explicit Euler on a 9-point stencil written in
//! pairwise "edge weight" form: each pair of neighboring pixels exchanges
//! flux through a single shared weight (arithmetic means of the tensor
//! entries for axis neighbors, of the off-diagonal entry for diagonal
//! neighbors). Because every exchange is antisymmetric, the scheme
//! conserves the image mean to machine precision, keeps constants exactly
//! fixed, and collapses to the standard 5-point heat stencil whenever `D`
//! is the identity. Connections leaving the image are simply dropped,
//! which is the no-flux boundary condition. One tensor field drives all
//! channels of a step, and the field is recomputed from the current image
//! every step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{convolve_separable_into, gaussian_kernel, ImageBuffer};

/// Weickert's constant for the m = 4 diffusivity family: the associated
/// flux switches from increasing to decreasing exactly at the contrast
/// scale, which is what makes `kappa` meaningful as an edge threshold.
pub const DIFFUSIVITY_C: f64 = 3.31488;

/// Parameters of one diffusion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EEDPreset {
    /// Contrast scale of the diffusivity (on gradient-magnitude-squared).
    pub kappa: f64,
    /// Tap count of the fixed pre-smoothing kernel (odd).
    pub kernel_size: usize,
    /// Standard deviation of the pre-smoothing kernel.
    pub sigma: f64,
    /// Number of explicit Euler steps.
    pub steps: usize,
    /// Step size; stability of the 9-point scheme requires tau <= 0.25.
    pub tau: f64,
}

impl EEDPreset {
    /// Mild texture removal: gentle contrast scale, small smoothing kernel.
    pub fn mild() -> Self {
        EEDPreset {
            kappa: 1.0 / 15.0,
            kernel_size: 5,
            sigma: 5f64.sqrt(),
            steps: 5792,
            tau: 0.2,
        }
    }

    /// Strong texture removal: higher contrast scale and wider smoothing.
    pub fn strong() -> Self {
        EEDPreset {
            kappa: 1.0 / 10.0,
            kernel_size: 9,
            sigma: 3.0,
            steps: 5792,
            tau: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if self.kernel_size % 2 == 0 || self.kernel_size == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        check_tau(self.tau)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 0.25) {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in (0, 0.25], got {tau}"
        )));
    }
    Ok(())
}

/// A symmetric 2x2 tensor per pixel, stored as three planes
/// (xx, xy, yy).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    width: usize,
    height: usize,
    pub(crate) xx: Vec<f64>,
    pub(crate) xy: Vec<f64>,
    pub(crate) yy: Vec<f64>,
}

impl TensorField {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        TensorField {
            width,
            height,
            xx: vec![0.0; n],
            xy: vec![0.0; n],
            yy: vec![0.0; n],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Tensor entries (xx, xy, yy) at one pixel.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64, f64) {
        let i = y * self.width + x;
        (self.xx[i], self.xy[i], self.yy[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, xx: f64, xy: f64, yy: f64) {
        let i = y * self.width + x;
        self.xx[i] = xx;
        self.xy[i] = xy;
        self.yy[i] = yy;
    }
}

/// Structure tensor of an image: channel-summed outer products of the
/// central-difference gradients of the pre-smoothed image.
///
/// The pre-smoothing uses a fixed `kernel_size`-tap truncated Gaussian —
/// the tap count is part of the contract, it is *not* widened to cover
/// four standard deviations. Mirror boundaries make the border gradients
/// vanish in the normal direction.
pub fn structure_tensor(image: &ImageBuffer, sigma: f64, kernel_size: usize) -> Result<TensorField> {
    if kernel_size % 2 == 0 || kernel_size == 0 {
        return Err(Error::InvalidParameter(format!(
            "kernel_size must be odd, got {kernel_size}"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let kernel = gaussian_kernel(sigma, kernel_size);
    let mut tmp = image.same_shape_zeroed();
    let mut smoothed = image.same_shape_zeroed();
    let mut field = TensorField::new(image.width(), image.height());
    structure_tensor_into(image, &kernel, &mut tmp, &mut smoothed, &mut field);
    Ok(field)
}

/// Scratch-reusing body of [`structure_tensor`].
fn structure_tensor_into(
    image: &ImageBuffer,
    kernel: &[f64],
    tmp: &mut ImageBuffer,
    smoothed: &mut ImageBuffer,
    field: &mut TensorField,
) {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    convolve_separable_into(image, kernel, tmp, smoothed);

    let data = smoothed.data();
    let (xx, xy, yy) = (&mut field.xx, &mut field.xy, &mut field.yy);
    xx.par_chunks_mut(w)
        .zip(xy.par_chunks_mut(w))
        .zip(yy.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((row_xx, row_xy), row_yy))| {
            // Mirror neighbors; at the border the two reflected samples
            // coincide and the normal gradient is zero.
            let ym = if y > 0 { y - 1 } else { 1.min(h - 1) };
            let yp = if y + 1 < h { y + 1 } else { h.saturating_sub(2) };
            for x in 0..w {
                let xm = if x > 0 { x - 1 } else { 1.min(w - 1) };
                let xp = if x + 1 < w { x + 1 } else { w.saturating_sub(2) };
                let (mut a, mut b, mut cc) = (0.0, 0.0, 0.0);
                for ch in 0..c {
                    let gx =
                        0.5 * (data[(y * w + xp) * c + ch] - data[(y * w + xm) * c + ch]);
                    let gy =
                        0.5 * (data[(yp * w + x) * c + ch] - data[(ym * w + x) * c + ch]);
                    a += gx * gx;
                    b += gx * gy;
                    cc += gy * gy;
                }
                row_xx[x] = a;
                row_xy[x] = b;
                row_yy[x] = cc;
            }
        });
}

/// Weickert diffusivity (m = 4) on squared-gradient contrast `s`.
#[inline]
pub fn diffusivity(s: f64, kappa: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    let r = s / (kappa * kappa);
    // -expm1 keeps the value strictly positive even when the exponent
    // underflows, so the tensor never degenerates to a singular one.
    -f64::exp_m1(-DIFFUSIVITY_C / (r * r * r * r))
}

/// Turn a structure tensor field into the diffusion tensor field.
///
/// Eigenvalues `mu1 >= mu2` of each tensor are remapped to
/// `(g(mu1), 1)` on the same eigenvectors. Degenerate tensors — a zero
/// discriminant means there is no distinguished orientation — become the
/// identity.
pub fn diffusion_tensor(field: &TensorField, kappa: f64) -> Result<TensorField> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let mut out = field.clone();
    diffusion_tensor_in_place(&mut out, kappa);
    Ok(out)
}

fn diffusion_tensor_in_place(field: &mut TensorField, kappa: f64) {
    let w = field.width;
    let (xx, xy, yy) = (&mut field.xx, &mut field.xy, &mut field.yy);
    xx.par_chunks_mut(w)
        .zip(xy.par_chunks_mut(w))
        .zip(yy.par_chunks_mut(w))
        .for_each(|((row_xx, row_xy), row_yy)| {
            for x in 0..row_xx.len() {
                let a = row_xx[x];
                let b = row_xy[x];
                let c = row_yy[x];
                let half_diff = 0.5 * (a - c);
                let disc = (half_diff * half_diff + b * b).sqrt();
                if disc == 0.0 {
                    row_xx[x] = 1.0;
                    row_xy[x] = 0.0;
                    row_yy[x] = 1.0;
                    continue;
                }
                let mu1 = 0.5 * (a + c) + disc;
                let lambda1 = diffusivity(mu1, kappa);
                // lambda2 = 1. Principal angle of the mu1 eigenvector:
                let phi = 0.5 * f64::atan2(2.0 * b, a - c);
                let (s, co) = phi.sin_cos();
                row_xx[x] = lambda1 * co * co + s * s;
                row_xy[x] = (lambda1 - 1.0) * co * s;
                row_yy[x] = lambda1 * s * s + co * co;
            }
        });
}

/// One explicit Euler step of `u += tau * div(D grad u)`.
///
/// All channels share the tensor field `d`. See the module docs for the
/// stencil; the short version is that neighbor pairs exchange
/// `w * (u_neighbor - u)` with one symmetric weight per pair, and pairs
/// reaching outside the image are dropped (no-flux boundary).
pub fn eed_step(u: &ImageBuffer, d: &TensorField, tau: f64) -> Result<ImageBuffer> {
    check_tau(tau)?;
    if d.width() != u.width() || d.height() != u.height() {
        return Err(Error::InvalidDimensions(format!(
            "tensor field is {}x{} but the image is {}x{}",
            d.width(),
            d.height(),
            u.width(),
            u.height()
        )));
    }
    let mut out = u.same_shape_zeroed();
    eed_step_into(u, d, tau, &mut out);
    Ok(out)
}

fn eed_step_into(u: &ImageBuffer, d: &TensorField, tau: f64, out: &mut ImageBuffer) {
    let (w, h, c) = (u.width(), u.height(), u.channels());
    let src = u.data();
    let row_len = w * c;
    let (dxx, dxy, dyy) = (&d.xx, &d.xy, &d.yy);

    out.data_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(y, row)| {
            let up = y > 0;
            let down = y + 1 < h;
            for x in 0..w {
                let left = x > 0;
                let right = x + 1 < w;
                let i = y * w + x;

                // Shared pairwise weights around this pixel. Axis
                // connections average the matching diagonal tensor entry;
                // diagonal connections average the two off-diagonal
                // entries adjacent to the pair, signed by the diagonal's
                // orientation.
                let w_e = if right { 0.5 * (dxx[i] + dxx[i + 1]) } else { 0.0 };
                let w_w = if left { 0.5 * (dxx[i] + dxx[i - 1]) } else { 0.0 };
                let w_s = if down { 0.5 * (dyy[i] + dyy[i + w]) } else { 0.0 };
                let w_n = if up { 0.5 * (dyy[i] + dyy[i - w]) } else { 0.0 };
                let w_se = if right && down {
                    0.25 * (dxy[i + 1] + dxy[i + w])
                } else {
                    0.0
                };
                let w_nw = if left && up {
                    0.25 * (dxy[i - 1] + dxy[i - w])
                } else {
                    0.0
                };
                let w_ne = if right && up {
                    -0.25 * (dxy[i + 1] + dxy[i - w])
                } else {
                    0.0
                };
                let w_sw = if left && down {
                    -0.25 * (dxy[i - 1] + dxy[i + w])
                } else {
                    0.0
                };

                for ch in 0..c {
                    let at = |px: usize, py: usize| src[(py * w + px) * c + ch];
                    let center = at(x, y);
                    let mut flux = 0.0;
                    if right {
                        flux += w_e * (at(x + 1, y) - center);
                    }
                    if left {
                        flux += w_w * (at(x - 1, y) - center);
                    }
                    if down {
                        flux += w_s * (at(x, y + 1) - center);
                    }
                    if up {
                        flux += w_n * (at(x, y - 1) - center);
                    }
                    if right && down {
                        flux += w_se * (at(x + 1, y + 1) - center);
                    }
                    if left && up {
                        flux += w_nw * (at(x - 1, y - 1) - center);
                    }
                    if right && up {
                        flux += w_ne * (at(x + 1, y - 1) - center);
                    }
                    if left && down {
                        flux += w_sw * (at(x - 1, y + 1) - center);
                    }
                    row[x * c + ch] = center + tau * flux;
                }
            }
        });
}

/// Run a full diffusion: recompute the tensor from the current image
/// every step, take `steps` Euler steps, clip to `[0, 1]` once at the end.
pub fn eed_run(image: &ImageBuffer, preset: &EEDPreset) -> Result<ImageBuffer> {
    preset.validate()?;
    let kernel = gaussian_kernel(preset.sigma, preset.kernel_size);

    let mut current = image.clone();
    let mut next = image.same_shape_zeroed();
    let mut tmp = image.same_shape_zeroed();
    let mut smoothed = image.same_shape_zeroed();
    let mut field = TensorField::new(image.width(), image.height());

    for _ in 0..preset.steps {
        structure_tensor_into(&current, &kernel, &mut tmp, &mut smoothed, &mut field);
        diffusion_tensor_in_place(&mut field, preset.kappa);
        eed_step_into(&current, &field, preset.tau, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    current.clip_in_place();
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(w: usize, h: usize, c: usize, seed: u64) -> ImageBuffer {
        let mut img = ImageBuffer::new(w, h, c).unwrap();
        let mut state = seed;
        for v in img.data_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            *v = (state >> 11) as f64 / (1u64 << 53) as f64;
        }
        img
    }

    /// Blurred noise: band-limited, no sharp diagonal contours — the kind
    /// of field the scheme keeps inside its range bounds.
    fn smooth_noise(w: usize, h: usize, c: usize, seed: u64) -> ImageBuffer {
        let spec = crate::image::GaussianSpec::new(1.5).unwrap();
        crate::image::gaussian_blur(&noise_image(w, h, c, seed), &spec)
    }

    fn rot90(img: &ImageBuffer) -> ImageBuffer {
        // (x, y) -> (y, w-1-x): quarter turn counterclockwise.
        let (w, h, c) = (img.width(), img.height(), img.channels());
        let mut out = ImageBuffer::new(h, w, c).unwrap();
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    out.set(y, w - 1 - x, ch, img.get(x, y, ch));
                }
            }
        }
        out
    }

    #[test]
    fn diffusivity_reference_points() {
        let kappa = 1.0 / 15.0;
        let k2 = kappa * kappa;
        // At the contrast scale: 1 - exp(-3.31488).
        assert!((diffusivity(k2, kappa) - 0.9636615910752151).abs() < 1e-12);
        // At twice the scale: 1 - exp(-3.31488 / 16).
        assert!((diffusivity(2.0 * k2, kappa) - 0.1871266803792987).abs() < 1e-12);
        // Non-positive contrast diffuses freely.
        assert_eq!(diffusivity(0.0, kappa), 1.0);
        assert_eq!(diffusivity(-1.0, kappa), 1.0);
        // Tiny positive contrast: indistinguishable from free diffusion,
        // but still defined.
        assert_eq!(diffusivity(1e-300, kappa), 1.0);
        // Huge contrast: vanishing but strictly positive.
        let g = diffusivity(1e6, kappa);
        assert!(g > 0.0 && g < 1e-9);
    }

    #[test]
    fn diffusivity_is_monotone_decreasing() {
        let kappa = 0.1;
        let mut prev = 1.0;
        for i in 1..200 {
            let s = i as f64 * 1e-3;
            let g = diffusivity(s, kappa);
            assert!(g <= prev + 1e-15, "g must not increase (s = {s})");
            assert!(g > 0.0 && g <= 1.0);
            prev = g;
        }
    }

    #[test]
    fn structure_tensor_of_constant_is_zero() {
        let img = ImageBuffer::from_vec(8, 6, 3, vec![0.4; 8 * 6 * 3]).unwrap();
        let tf = structure_tensor(&img, 5f64.sqrt(), 5).unwrap();
        for i in 0..8 * 6 {
            assert!(tf.xx[i].abs() < 1e-14);
            assert!(tf.xy[i].abs() < 1e-14);
            assert!(tf.yy[i].abs() < 1e-14);
        }
    }

    #[test]
    fn structure_tensor_sees_a_vertical_edge_horizontally() {
        // Left half dark, right half bright: gradient along x only, so
        // xx > 0 near the edge while xy and yy stay ~0.
        let mut img = ImageBuffer::new(16, 8, 1).unwrap();
        for y in 0..8 {
            for x in 0..16 {
                img.set(x, y, 0, if x < 8 { 0.0 } else { 1.0 });
            }
        }
        let tf = structure_tensor(&img, 1.0, 5).unwrap();
        let (xx, xy, yy) = tf.get(8, 4);
        assert!(xx > 1e-3, "expected horizontal energy, got {xx}");
        assert!(xy.abs() < 1e-12);
        assert!(yy.abs() < 1e-12);
    }

    #[test]
    fn structure_tensor_rotates_with_the_image() {
        // Quarter-turn equivariance: J(rot(u)) at the rotated pixel is
        // the rotated tensor (xx <-> yy, xy negated).
        let img = smooth_noise(12, 9, 1, 77);
        let tf = structure_tensor(&img, 1.2, 5).unwrap();
        let rot = rot90(&img);
        let tfr = structure_tensor(&rot, 1.2, 5).unwrap();
        for y in 0..9 {
            for x in 0..12 {
                let (a, b, c) = tf.get(x, y);
                let (ra, rb, rc) = tfr.get(y, 12 - 1 - x);
                assert!((ra - c).abs() < 1e-12, "xx' = yy at ({x},{y})");
                assert!((rc - a).abs() < 1e-12, "yy' = xx at ({x},{y})");
                assert!((rb + b).abs() < 1e-12, "xy' = -xy at ({x},{y})");
            }
        }
    }

    #[test]
    fn zero_tensor_becomes_identity_diffusion() {
        let tf = TensorField::new(4, 3);
        let d = diffusion_tensor(&tf, 0.1).unwrap();
        for i in 0..12 {
            assert_eq!(d.xx[i], 1.0);
            assert_eq!(d.xy[i], 0.0);
            assert_eq!(d.yy[i], 1.0);
        }
    }

    #[test]
    fn diffusion_tensor_eigenvalues_stay_in_unit_interval() {
        let img = noise_image(20, 15, 3, 31);
        let tf = structure_tensor(&img, 1.0, 5).unwrap();
        let d = diffusion_tensor(&tf, 1.0 / 15.0).unwrap();
        for i in 0..20 * 15 {
            let (a, b, c) = (d.xx[i], d.xy[i], d.yy[i]);
            let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let hi = 0.5 * (a + c) + disc;
            let lo = 0.5 * (a + c) - disc;
            assert!(lo > 0.0, "eigenvalue {lo} must be positive");
            assert!(hi <= 1.0 + 1e-12, "eigenvalue {hi} must be <= 1");
        }
    }

    #[test]
    fn diffusion_tensor_aligns_with_a_strong_gradient() {
        // Pure x-gradient tensor: across-edge direction is x, so xx gets
        // the suppressed eigenvalue and yy stays 1.
        let mut tf = TensorField::new(1, 1);
        tf.set(0, 0, 0.25, 0.0, 0.0); // |grad| = 0.5 along x
        let kappa = 1.0 / 15.0;
        let d = diffusion_tensor(&tf, kappa).unwrap();
        let (a, b, c) = d.get(0, 0);
        assert!((a - diffusivity(0.25, kappa)).abs() < 1e-15);
        assert_eq!(b, 0.0);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn step_rejects_bad_tau_and_shape() {
        let img = ImageBuffer::new(4, 4, 1).unwrap();
        let tf = TensorField::new(4, 4);
        assert!(eed_step(&img, &tf, 0.0).is_err());
        assert!(eed_step(&img, &tf, -0.1).is_err());
        assert!(eed_step(&img, &tf, 0.26).is_err());
        assert!(eed_step(&img, &tf, 0.25).is_ok());
        let small = TensorField::new(3, 4);
        assert!(eed_step(&img, &small, 0.2).is_err());
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let img = ImageBuffer::from_vec(10, 7, 3, vec![0.6; 10 * 7 * 3]).unwrap();
        let tf = structure_tensor(&img, 5f64.sqrt(), 5).unwrap();
        let d = diffusion_tensor(&tf, 1.0 / 15.0).unwrap();
        let out = eed_step(&img, &d, 0.2).unwrap();
        assert_eq!(out.data(), img.data());
    }

    /// Independent oracle: 5-point explicit heat step with no-flux
    /// boundaries implemented via clamped ghost samples.
    fn heat_step(u: &ImageBuffer, tau: f64) -> ImageBuffer {
        let (w, h, c) = (u.width(), u.height(), u.channels());
        let mut out = u.same_shape_zeroed();
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    let center = u.get(x, y, ch);
                    let e = if x + 1 < w { u.get(x + 1, y, ch) } else { center };
                    let we = if x > 0 { u.get(x - 1, y, ch) } else { center };
                    let s = if y + 1 < h { u.get(x, y + 1, ch) } else { center };
                    let n = if y > 0 { u.get(x, y - 1, ch) } else { center };
                    out.set(x, y, ch, center + tau * (e + we + s + n - 4.0 * center));
                }
            }
        }
        out
    }

    #[test]
    fn identity_tensor_reduces_to_five_point_heat_flow() {
        let img = noise_image(17, 13, 3, 2);
        let mut identity = TensorField::new(17, 13);
        for i in 0..17 * 13 {
            identity.xx[i] = 1.0;
            identity.yy[i] = 1.0;
        }
        let ours = eed_step(&img, &identity, 0.2).unwrap();
        let oracle = heat_step(&img, 0.2);
        for (a, b) in ours.data().iter().zip(oracle.data()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn step_conserves_the_mean_on_anisotropic_fields() {
        // Random image, real (anisotropic) tensor field from another
        // image: pairwise antisymmetric exchange keeps the mean.
        let img = noise_image(23, 19, 1, 4);
        let other = smooth_noise(23, 19, 1, 5);
        let tf = structure_tensor(&other, 1.0, 5).unwrap();
        let d = diffusion_tensor(&tf, 1.0 / 15.0).unwrap();
        let before = img.channel_mean(0);
        let out = eed_step(&img, &d, 0.2).unwrap();
        assert!((out.channel_mean(0) - before).abs() < 1e-12);
    }

    #[test]
    fn run_with_zero_steps_is_identity() {
        let img = smooth_noise(9, 9, 3, 6);
        let preset = EEDPreset {
            steps: 0,
            ..EEDPreset::mild()
        };
        let out = eed_run(&img, &preset).unwrap();
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn presets_carry_the_published_parameters() {
        let mild = EEDPreset::mild();
        assert!((mild.kappa - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(mild.kernel_size, 5);
        assert!((mild.sigma - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mild.steps, 5792);
        assert!((mild.tau - 0.2).abs() < 1e-15);
        let strong = EEDPreset::strong();
        assert!((strong.kappa - 0.1).abs() < 1e-15);
        assert_eq!(strong.kernel_size, 9);
        assert!((strong.sigma - 3.0).abs() < 1e-15);
        assert_eq!(strong.steps, 5792);
        mild.validate().unwrap();
        strong.validate().unwrap();
    }

    #[test]
    fn preset_validation_catches_bad_values() {
        let mut p = EEDPreset::mild();
        p.tau = 0.3;
        assert!(p.validate().is_err());
        p = EEDPreset::mild();
        p.kernel_size = 4;
        assert!(p.validate().is_err());
        p = EEDPreset::mild();
        p.kappa = 0.0;
        assert!(p.validate().is_err());
        p = EEDPreset::mild();
        p.sigma = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn short_run_respects_range_and_mean_on_smooth_fields() {
        let img = smooth_noise(32, 32, 1, 8);
        let lo = img.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = img.channel_mean(0);
        let preset = EEDPreset {
            steps: 150,
            ..EEDPreset::mild()
        };
        let out = eed_run(&img, &preset).unwrap();
        for v in out.data() {
            assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9, "{v} left [{lo}, {hi}]");
        }
        assert!((out.channel_mean(0) - mean).abs() < 1e-9);
    }

    #[test]
    fn axis_aligned_step_edge_survives_and_stays_bounded() {
        // A sharp vertical step is the canonical EED input: the edge must
        // not overshoot (values stay in [0, 1] pre-clip) and must still be
        // sharp after diffusion.
        let mut img = ImageBuffer::new(32, 16, 1).unwrap();
        for y in 0..16 {
            for x in 0..32 {
                img.set(x, y, 0, if x < 16 { 0.1 } else { 0.9 });
            }
        }
        let preset = EEDPreset {
            steps: 200,
            ..EEDPreset::mild()
        };
        let out = eed_run(&img, &preset).unwrap();
        for v in out.data() {
            assert!(*v >= 0.1 - 1e-9 && *v <= 0.9 + 1e-9);
        }
        // Contrast across the midline survives.
        let left = out.get(8, 8, 0);
        let right = out.get(24, 8, 0);
        assert!(right - left > 0.5, "edge should persist, got {left} vs {right}");
    }

    #[test]
    fn rotating_the_image_commutes_with_diffusion() {
        let img = smooth_noise(14, 10, 1, 12);
        let preset = EEDPreset {
            steps: 25,
            ..EEDPreset::mild()
        };
        let a = eed_run(&rot90(&img), &preset).unwrap();
        let b = rot90(&eed_run(&img, &preset).unwrap());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn total_variation_decreases_on_textured_input() {
        fn tv(img: &ImageBuffer) -> f64 {
            let (w, h) = (img.width(), img.height());
            let mut t = 0.0;
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        t += (img.get(x + 1, y, 0) - img.get(x, y, 0)).abs();
                    }
                    if y + 1 < h {
                        t += (img.get(x, y + 1, 0) - img.get(x, y, 0)).abs();
                    }
                }
            }
            t
        }
        let img = smooth_noise(24, 24, 1, 3);
        let mild = eed_run(
            &img,
            &EEDPreset {
                steps: 60,
                ..EEDPreset::mild()
            },
        )
        .unwrap();
        let strong = eed_run(
            &img,
            &EEDPreset {
                steps: 60,
                ..EEDPreset::strong()
            },
        )
        .unwrap();
        let t0 = tv(&img);
        let tm = tv(&mild);
        let ts = tv(&strong);
        assert!(tm < t0, "mild diffusion must remove texture: {tm} vs {t0}");
        assert!(ts < t0, "strong diffusion must remove texture: {ts} vs {t0}");
        assert!(
            ts <= tm * 1.05,
            "strong should smooth at least comparably: strong {ts}, mild {tm}"
        );
    }
}
