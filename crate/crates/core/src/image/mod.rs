//! Single-channel planar images in normalized [0, 1] units, plus file codecs.

mod pgm;
mod raw;

pub use pgm::{decode_pgm, encode_pgm, load_pgm, quantize_u8, save_pgm};
pub use raw::{decode_raw_f32, encode_raw_f32, load_raw_f32, save_raw_f32};

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("zero image dimension ({height}x{width})")]
    ZeroDimension { height: usize, width: usize },
    #[error("data length {len} does not match {height}x{width}")]
    LengthMismatch {
        height: usize,
        width: usize,
        len: usize,
    },
    #[error("unsupported format: expected binary P5 graymap")]
    UnsupportedFormat,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("bad magic")]
    BadMagic,
    #[error("truncated: expected {expected} payload bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("size mismatch: expected {expected} payload bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major grayscale image. Values are nominally in [0, 1] but any finite
/// value is representable; clamping only happens on 8-bit export.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::ZeroDimension { height, width });
        }
        if data.len() != height * width {
            return Err(ImageError::LengthMismatch {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Result<Self, ImageError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    /// Caller guarantees non-zero dims and matching length.
    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert!(height > 0 && width > 0 && data.len() == height * width);
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; images have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image::from_parts(
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Copies the `h`x`w` window whose top-left corner is at (`row`, `col`).
    pub fn crop(&self, row: usize, col: usize, h: usize, w: usize) -> Result<Image, ImageError> {
        if h == 0 || w == 0 {
            return Err(ImageError::ZeroDimension {
                height: h,
                width: w,
            });
        }
        assert!(
            row + h <= self.height && col + w <= self.width,
            "crop window out of bounds"
        );
        let mut data = Vec::with_capacity(h * w);
        for r in row..row + h {
            let start = r * self.width + col;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Ok(Image::from_parts(h, w, data))
    }

    /// Largest absolute per-pixel difference. Panics on a dimension mismatch.
    pub fn max_abs_diff(&self, other: &Image) -> f32 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    /// (min, max, mean) of the pixel values; mean accumulated in f64.
    pub fn stats(&self) -> (f32, f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        let mut sum = 0.0f64;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v as f64;
        }
        (lo, hi, (sum / self.data.len() as f64) as f32)
    }
}

/// Loads `.pgm` files as 8-bit graymaps and anything else as raw f32.
pub fn load_any(path: &Path) -> Result<Image, ImageError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => load_pgm(path),
        _ => load_raw_f32(path),
    }
}
