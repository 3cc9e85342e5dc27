//! 8-bit PNG input/output.
//!
//! Images are 8-bit grayscale or RGB PNGs; label masks are 8-bit
//! single-channel PNGs whose bytes are class ids. Anything else (16-bit
//! depth, alpha) is rejected with a dedicated error rather than silently
//! converted, since a silent conversion would change the data the
//! downstream statistics see.

use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageError, ImageFormat, ImageReader};

use super::{ImageBuffer, LabelMask};
use crate::error::{Error, Result};

/// Map a unit-interval sample to a byte, rounding half up.
///
/// Out-of-range samples are clamped first, so `quantize_sample` is total;
/// callers are expected to have clipped already.
#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// Load an 8-bit grayscale or RGB PNG into a unit-interval buffer.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let data = buf.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
            ImageBuffer::from_vec(w, h, 1, data)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let data = buf.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
            ImageBuffer::from_vec(w, h, 3, data)
        }
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_)
        | DynamicImage::ImageRgb32F(_)
        | DynamicImage::ImageRgba32F(_) => Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
        }),
        _ => Err(Error::UnsupportedColorType {
            path: path.to_path_buf(),
        }),
    }
}

/// Load an 8-bit single-channel PNG of class ids.
pub fn load_label_png(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            LabelMask::from_vec(w, h, buf.into_raw())
        }
        DynamicImage::ImageLuma16(_) => Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
        }),
        _ => Err(Error::UnsupportedColorType {
            path: path.to_path_buf(),
        }),
    }
}

/// Save a unit-interval buffer as an 8-bit grayscale or RGB PNG.
pub fn save_png(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize_sample(v)).collect();
    let color = match image.channels() {
        1 => ExtendedColorType::L8,
        _ => ExtendedColorType::Rgb8,
    };
    write_png(path, &bytes, image.width(), image.height(), color)
}

/// Save a label mask as an 8-bit single-channel PNG.
pub fn save_label_png(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    write_png(
        path.as_ref(),
        mask.ids(),
        mask.width(),
        mask.height(),
        ExtendedColorType::L8,
    )
}

fn write_png(
    path: &Path,
    bytes: &[u8],
    width: usize,
    height: usize,
    color: ExtendedColorType,
) -> Result<()> {
    image::save_buffer_with_format(
        path,
        bytes,
        width as u32,
        height as u32,
        color,
        ImageFormat::Png,
    )
    .map_err(|e| match e {
        ImageError::IoError(io) => Error::io(path, io),
        other => Error::Encode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}
