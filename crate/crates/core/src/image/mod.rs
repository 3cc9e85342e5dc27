//! Image and label containers plus the resampling/filtering primitives.
//!
//! Images are dense row-major, channel-interleaved `f64` buffers with
//! samples nominally in `[0, 1]`; label masks are `u8` class-id rasters
//! with 255 reserved as the ignore id. All arithmetic runs in `f64` so
//! the statistics-matching and diffusion code is not limited by storage
//! precision; quantization to 8 bits happens only at the PNG boundary.

mod filter;
mod io;
mod resize;

pub use filter::{gaussian_kernel, gaussian_kernel_with_radius, reflect_index};
pub use io::{load_label_png, load_png, quantize_sample, save_label_png, save_png};
pub use resize::resize_bilinear;

pub(crate) use filter::{convolve_separable, convolve_separable_into};

use crate::error::{Error, Result};

/// Class id treated as "ignore" by every metric.
pub const IGNORE_ID: u8 = 255;

/// Dense row-major, channel-interleaved image with `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Zero-filled image. `channels` must be 1 (grayscale) or 3 (RGB).
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::check_shape(width, height, channels)?;
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        })
    }

    /// Wrap an existing sample vector (row-major, channel-interleaved).
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_shape(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::InvalidDimensions(format!(
                "sample vector has {} entries, expected {}*{}*{} = {}",
                data.len(),
                width,
                height,
                channels,
                width * height * channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "image samples must be finite".into(),
            ));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    fn check_shape(width: usize, height: usize, channels: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidDimensions(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        Ok(())
    }

    /// Same shape as `self`, zero-filled. Internal scratch constructor.
    pub(crate) fn same_shape_zeroed(&self) -> Self {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: vec![0.0; self.data.len()],
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

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, ch: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && ch < self.channels);
        (y * self.width + x) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> f64 {
        self.data[self.index(x, y, ch)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, value: f64) {
        let i = self.index(x, y, ch);
        self.data[i] = value;
    }

    /// Arithmetic mean of one channel.
    pub fn channel_mean(&self, ch: usize) -> f64 {
        let mut sum = 0.0;
        for px in self.data[ch..].iter().step_by(self.channels) {
            sum += px;
        }
        sum / (self.width * self.height) as f64
    }

    /// Clamp every sample into `[0, 1]`.
    pub fn clip_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Single-channel `u8` class-id raster aligned with an [`ImageBuffer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    ids: Vec<u8>,
}

impl LabelMask {
    pub fn from_vec(width: usize, height: usize, ids: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!(
                "label dimensions must be positive, got {width}x{height}"
            )));
        }
        if ids.len() != width * height {
            return Err(Error::InvalidDimensions(format!(
                "label vector has {} entries, expected {}*{} = {}",
                ids.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(LabelMask { width, height, ids })
    }

    /// Constant-id mask, mostly useful in tests and fixtures.
    pub fn filled(width: usize, height: usize, id: u8) -> Result<Self> {
        Self::from_vec(width, height, vec![id; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.ids[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, id: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.ids[y * self.width + x] = id;
    }
}

/// Parameters of a truncated Gaussian filter.
///
/// The discrete kernel covers `±ceil(truncate * sigma)` taps and is
/// renormalized to unit sum, so blurring preserves the mean of the image
/// under the mirror boundary handling used by [`gaussian_blur`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    sigma: f64,
    truncate: f64,
}

impl GaussianSpec {
    /// Standard truncation at four standard deviations.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_truncate(sigma, 4.0)
    }

    pub fn with_truncate(sigma: f64, truncate: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        if !(truncate > 0.0) || !truncate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian truncate must be positive and finite, got {truncate}"
            )));
        }
        Ok(GaussianSpec { sigma, truncate })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn truncate(&self) -> f64 {
        self.truncate
    }

    /// Tap radius: `ceil(truncate * sigma)`.
    pub fn radius(&self) -> usize {
        (self.truncate * self.sigma).ceil() as usize
    }

    /// The normalized 1-D kernel, length `2 * radius + 1`.
    pub fn kernel(&self) -> Vec<f64> {
        gaussian_kernel_with_radius(self.sigma, self.radius())
    }
}

/// Separable Gaussian blur with mirror (reflect-without-repeat) boundaries.
pub fn gaussian_blur(image: &ImageBuffer, spec: &GaussianSpec) -> ImageBuffer {
    convolve_separable(image, &spec.kernel())
}
