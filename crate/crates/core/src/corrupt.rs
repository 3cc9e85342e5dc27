//! Parametric image corruptions.
//!
//! Five corruption families probe which cues a segmentation model relies
//! on, each swept over a fixed severity grid:
//!
//! * **contrast** `c in (0, 1]`: `I' = (1 - c) / 2 + c * I`, squeezing
//!   values toward mid-gray; `c = 1` is the identity.
//! * **uniform-noise** `eta >= 0`: adds i.i.d. `U(-eta, eta)` per sample;
//!   `eta = 0` is the identity.
//! * **low-pass** `sigma > 0`: Gaussian blur truncated at four standard
//!   deviations.
//! * **high-pass** `sigma > 0`: `hp = I - blur(I)`, then each channel is
//!   re-centered on a fixed dataset mean:
//!   `out_c = hp_c + (mean_c - mean(hp_c))`, so the result sits at the
//!   reference brightness instead of mid-zero.
//! * **phase-noise** `w in [0, 180]` degrees: every Fourier coefficient
//!   is rotated by an independent uniform phase in `[-w, w]`, drawn on a
//!   Hermitian-symmetric field (conjugate bins get opposite angles,
//!   self-conjugate bins stay real) so the perturbed spectrum still
//!   inverts to a real image with the amplitude spectrum untouched;
//!   `w = 0` is the identity.
//!
//! An optional sixth family, **noise-on-reduced-contrast**, first applies
//! the contrast corruption at a fixed level and then the uniform noise
//! sweep, measuring how noise robustness degrades once contrast is gone.
//!
//! Every corruption clips its result to `[0, 1]` before returning.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, GaussianSpec, ImageBuffer};
use crate::seed::SeedStream;

/// Per-channel RGB means of the Cityscapes training split, used to
/// re-center high-pass outputs.
pub const CITYSCAPES_MEANS: [f64; 3] = [0.2945, 0.3334, 0.2949];

/// The corruption families, in canonical grid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorruptionFamily {
    Contrast,
    UniformNoise,
    NoiseOnReducedContrast,
    LowPass,
    HighPass,
    PhaseNoise,
}

impl CorruptionFamily {
    /// Kebab-case identifier used in CLI flags, directories and manifests.
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionFamily::Contrast => "contrast",
            CorruptionFamily::UniformNoise => "uniform-noise",
            CorruptionFamily::NoiseOnReducedContrast => "noise-on-reduced-contrast",
            CorruptionFamily::LowPass => "low-pass",
            CorruptionFamily::HighPass => "high-pass",
            CorruptionFamily::PhaseNoise => "phase-noise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "contrast" => Some(CorruptionFamily::Contrast),
            "uniform-noise" => Some(CorruptionFamily::UniformNoise),
            "noise-on-reduced-contrast" => Some(CorruptionFamily::NoiseOnReducedContrast),
            "low-pass" => Some(CorruptionFamily::LowPass),
            "high-pass" => Some(CorruptionFamily::HighPass),
            "phase-noise" => Some(CorruptionFamily::PhaseNoise),
            _ => None,
        }
    }

    /// The severity sweep of this family.
    pub fn levels(&self) -> &'static [f64] {
        match self {
            CorruptionFamily::Contrast => &[0.01, 0.03, 0.05, 0.1, 0.15, 0.3, 0.5, 1.0],
            CorruptionFamily::UniformNoise | CorruptionFamily::NoiseOnReducedContrast => {
                &[0.0, 0.03, 0.05, 0.1, 0.2, 0.35, 0.6, 0.9]
            }
            CorruptionFamily::LowPass => &[1.0, 3.0, 7.0, 10.0, 15.0, 40.0],
            CorruptionFamily::HighPass => &[0.4, 0.45, 0.55, 0.7, 1.0, 1.5, 3.0],
            CorruptionFamily::PhaseNoise => &[0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0],
        }
    }

    /// Does this family consume random draws?
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            CorruptionFamily::UniformNoise
                | CorruptionFamily::NoiseOnReducedContrast
                | CorruptionFamily::PhaseNoise
        )
    }
}

impl std::fmt::Display for CorruptionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One (family, severity) cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub family: CorruptionFamily,
    pub level: f64,
}

/// Fixed per-channel reference means for high-pass re-centering.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeans {
    values: Vec<f64>,
}

impl DatasetMeans {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != 1 && values.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "dataset means need 1 or 3 channels, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "dataset means must lie in [0, 1]".into(),
            ));
        }
        Ok(DatasetMeans { values })
    }

    /// Cityscapes RGB reference means.
    pub fn cityscapes() -> Self {
        DatasetMeans {
            values: CITYSCAPES_MEANS.to_vec(),
        }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, ch: usize) -> f64 {
        self.values[ch]
    }
}

/// Fixed knobs shared by every grid cell.
#[derive(Debug, Clone)]
pub struct CorruptionContext {
    /// Reference means for the high-pass family.
    pub means: DatasetMeans,
    /// Contrast level applied before the noise sweep in
    /// noise-on-reduced-contrast.
    pub reduced_contrast: f64,
}

impl Default for CorruptionContext {
    fn default() -> Self {
        CorruptionContext {
            means: DatasetMeans::cityscapes(),
            reduced_contrast: 0.3,
        }
    }
}

/// The full severity grid in canonical order. The optional
/// noise-on-reduced-contrast block (another 8 cells after uniform-noise)
/// is off by default.
pub fn corruption_grid(include_noise_on_reduced_contrast: bool) -> Vec<CorruptionSpec> {
    let mut families = vec![CorruptionFamily::Contrast, CorruptionFamily::UniformNoise];
    if include_noise_on_reduced_contrast {
        families.push(CorruptionFamily::NoiseOnReducedContrast);
    }
    families.extend([
        CorruptionFamily::LowPass,
        CorruptionFamily::HighPass,
        CorruptionFamily::PhaseNoise,
    ]);
    families
        .into_iter()
        .flat_map(|family| {
            family
                .levels()
                .iter()
                .map(move |&level| CorruptionSpec { family, level })
        })
        .collect()
}

/// Contrast reduction toward mid-gray: `I' = (1 - c) / 2 + c * I`.
pub fn apply_contrast(image: &ImageBuffer, c: f64) -> Result<ImageBuffer> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "contrast level must lie in (0, 1], got {c}"
        )));
    }
    let offset = (1.0 - c) / 2.0;
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = offset + c * *v;
    }
    out.clip_in_place();
    Ok(out)
}

/// Additive i.i.d. uniform noise `U(-eta, eta)` per sample.
pub fn apply_uniform_noise(
    image: &ImageBuffer,
    eta: f64,
    stream: &mut SeedStream,
) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "noise level must lie in [0, 1], got {eta}"
        )));
    }
    let mut out = image.clone();
    for v in out.data_mut() {
        *v += stream.uniform(-eta, eta);
    }
    out.clip_in_place();
    Ok(out)
}

/// Contrast reduction followed by the uniform noise sweep.
pub fn apply_noise_on_reduced_contrast(
    image: &ImageBuffer,
    eta: f64,
    contrast: f64,
    stream: &mut SeedStream,
) -> Result<ImageBuffer> {
    let reduced = apply_contrast(image, contrast)?;
    apply_uniform_noise(&reduced, eta, stream)
}

/// Gaussian low-pass, truncated at four standard deviations.
pub fn apply_low_pass(image: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    let mut out = gaussian_blur(image, &GaussianSpec::new(sigma)?);
    out.clip_in_place();
    Ok(out)
}

/// High-pass residual re-centered on fixed dataset means.
pub fn apply_high_pass(
    image: &ImageBuffer,
    sigma: f64,
    means: &DatasetMeans,
) -> Result<ImageBuffer> {
    let mut out = apply_high_pass_preclip(image, sigma, means)?;
    out.clip_in_place();
    Ok(out)
}

/// High-pass without the final clip. Pre-clip the re-centering is exact:
/// each output channel's mean equals the reference mean to floating-point
/// precision (clipping afterwards can shift it, since the residual tails
/// are asymmetric around the reference).
pub fn apply_high_pass_preclip(
    image: &ImageBuffer,
    sigma: f64,
    means: &DatasetMeans,
) -> Result<ImageBuffer> {
    if means.channels() != image.channels() {
        return Err(Error::InvalidDimensions(format!(
            "dataset means cover {} channels but the image has {}",
            means.channels(),
            image.channels()
        )));
    }
    let blurred = gaussian_blur(image, &GaussianSpec::new(sigma)?);
    let mut out = image.clone();
    let c = image.channels();
    for (v, b) in out.data_mut().iter_mut().zip(blurred.data()) {
        *v -= b;
    }
    for ch in 0..c {
        let shift = means.get(ch) - out.channel_mean(ch);
        for v in out.data_mut()[ch..].iter_mut().step_by(c) {
            *v += shift;
        }
    }
    Ok(out)
}

/// Phase noise: rotate every Fourier coefficient by an independent
/// uniform angle in `[-w, w]` degrees, clipped to `[0, 1]` at the end.
pub fn apply_phase_noise(
    image: &ImageBuffer,
    w_degrees: f64,
    stream: &mut SeedStream,
) -> Result<ImageBuffer> {
    let (mut out, _) = apply_phase_noise_preclip(image, w_degrees, stream)?;
    out.clip_in_place();
    Ok(out)
}

/// Pre-clip phase noise plus the largest imaginary residue dropped when
/// realizing the inverse transform — a diagnostic for the Hermitian
/// symmetry of the drawn phase field (it should be at floating-point
/// noise level).
pub fn apply_phase_noise_preclip(
    image: &ImageBuffer,
    w_degrees: f64,
    stream: &mut SeedStream,
) -> Result<(ImageBuffer, f64)> {
    if !(0.0..=180.0).contains(&w_degrees) {
        return Err(Error::InvalidParameter(format!(
            "phase width must lie in [0, 180] degrees, got {w_degrees}"
        )));
    }
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let n = w * h;
    let mut out = image.clone();
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); n];
    let mut phases = vec![0.0f64; n];
    let mut max_imag: f64 = 0.0;
    let deg_to_rad = std::f64::consts::PI / 180.0;

    for ch in 0..c {
        for (i, slot) in spectrum.iter_mut().enumerate() {
            *slot = Complex::new(image.data()[i * c + ch], 0.0);
        }
        fft2d(&mut spectrum, &mut scratch, w, h, false);

        // Draw one phase per conjugate pair, scanning bins row-major and
        // assigning the negated angle to the partner; self-conjugate bins
        // (DC and Nyquist combinations) stay at zero so they remain real.
        for slot in phases.iter_mut() {
            *slot = 0.0;
        }
        for ky in 0..h {
            for kx in 0..w {
                let cy = (h - ky) % h;
                let cx = (w - kx) % w;
                if (ky, kx) < (cy, cx) {
                    let phi = stream.uniform(-w_degrees, w_degrees) * deg_to_rad;
                    phases[ky * w + kx] = phi;
                    phases[cy * w + cx] = -phi;
                }
            }
        }
        for (f, &phi) in spectrum.iter_mut().zip(&phases) {
            let (s, co) = phi.sin_cos();
            *f *= Complex::new(co, s);
        }

        fft2d(&mut spectrum, &mut scratch, w, h, true);
        let norm = 1.0 / n as f64;
        for (i, f) in spectrum.iter().enumerate() {
            out.data_mut()[i * c + ch] = f.re * norm;
            max_imag = max_imag.max((f.im * norm).abs());
        }
    }
    Ok((out, max_imag))
}

/// Apply one grid cell.
///
/// Stochastic families draw from `stream`; deterministic ones ignore it.
pub fn apply(
    image: &ImageBuffer,
    spec: &CorruptionSpec,
    ctx: &CorruptionContext,
    stream: &mut SeedStream,
) -> Result<ImageBuffer> {
    match spec.family {
        CorruptionFamily::Contrast => apply_contrast(image, spec.level),
        CorruptionFamily::UniformNoise => apply_uniform_noise(image, spec.level, stream),
        CorruptionFamily::NoiseOnReducedContrast => {
            apply_noise_on_reduced_contrast(image, spec.level, ctx.reduced_contrast, stream)
        }
        CorruptionFamily::LowPass => apply_low_pass(image, spec.level),
        CorruptionFamily::HighPass => apply_high_pass(image, spec.level, &ctx.means),
        CorruptionFamily::PhaseNoise => apply_phase_noise(image, spec.level, stream),
    }
}

/// In-place 2-D FFT over a row-major `w` x `h` complex raster: transform
/// rows, transpose, transform the other axis as rows, transpose back.
fn fft2d(data: &mut [Complex<f64>], scratch: &mut [Complex<f64>], w: usize, h: usize, inverse: bool) {
    debug_assert_eq!(data.len(), w * h);
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    row_fft.process(data);
    transpose(data, scratch, w, h);
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    col_fft.process(scratch);
    transpose(scratch, data, h, w);
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], w: usize, h: usize) {
    for y in 0..h {
        for x in 0..w {
            dst[x * h + y] = src[y * w + x];
        }
    }
}
