//! The restoration-function contract and reference restorers whose symmetry
//! properties are known in closed form.

use thiserror::Error;

use crate::conv::{correlate_accumulate, pad_plane};
use crate::image::Image;
use crate::transforms::{apply_d4, invert_d4, D4Transform};

#[derive(Debug, Error)]
pub enum RestoreError {
    #[error("kernel dims {kh}x{kw} must be odd and positive")]
    EvenKernel { kh: usize, kw: usize },
    #[error("kernel has {len} taps, expected {expected}")]
    KernelLength { len: usize, expected: usize },
    #[error("restorer changed dims from {input:?} to {output:?}")]
    ShapeChanged {
        input: (usize, usize),
        output: (usize, usize),
    },
    #[error("{0}")]
    Network(String),
}

/// A deterministic, shape-preserving map from a degraded image to an
/// estimate of the clean one. Implementations must be safe to call from
/// several threads at once.
pub trait Restorer: Send + Sync {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError>;

    fn describe(&self) -> String;
}

impl<R: Restorer + ?Sized> Restorer for &R {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError> {
        (**self).restore(img)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<R: Restorer + ?Sized> Restorer for Box<R> {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError> {
        (**self).restore(img)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRestorer;

impl Restorer for IdentityRestorer {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError> {
        Ok(img.clone())
    }

    fn describe(&self) -> String {
        "identity".into()
    }
}

/// Single linear correlation kernel (no flip), zero bias, mirror padding.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilterRestorer {
    kernel: Vec<f32>,
    kh: usize,
    kw: usize,
}

impl ConvFilterRestorer {
    pub fn new(kernel: Vec<f32>, kh: usize, kw: usize) -> Result<Self, RestoreError> {
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(RestoreError::EvenKernel { kh, kw });
        }
        if kernel.len() != kh * kw {
            return Err(RestoreError::KernelLength {
                len: kernel.len(),
                expected: kh * kw,
            });
        }
        Ok(Self { kernel, kh, kw })
    }

    /// Binomial 3x3 Gaussian, invariant under all eight grid symmetries.
    pub fn gaussian3() -> Self {
        let k = [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0]
            .iter()
            .map(|v| v / 16.0)
            .collect();
        Self::new(k, 3, 3).unwrap()
    }

    pub fn box3() -> Self {
        Self::new(vec![1.0 / 9.0; 9], 3, 3).unwrap()
    }

    /// Picks up the left neighbour: output(r, c) = input(r, c - 1).
    pub fn shift_left() -> Self {
        Self::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 3, 3).unwrap()
    }

    pub fn kernel(&self) -> &[f32] {
        &self.kernel
    }

    pub fn kernel_dims(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }
}

impl Restorer for ConvFilterRestorer {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError> {
        let (h, w) = img.dims();
        let padded = pad_plane(img.data(), h, w, self.kh / 2, self.kw / 2);
        let mut out = vec![0.0f32; h * w];
        correlate_accumulate(&padded, h, w, &self.kernel, self.kh, self.kw, &mut out);
        Ok(Image::from_parts(h, w, out))
    }

    fn describe(&self) -> String {
        format!("filter{}x{}{:?}", self.kh, self.kw, self.kernel)
    }
}

/// Largest deviation, over all eight operations g, between
/// g^-1(f(g(img))) and f(img).
pub fn d4_equivariance_error(r: &dyn Restorer, img: &Image) -> Result<f32, RestoreError> {
    let base = r.restore(img)?;
    let mut worst = 0.0f32;
    for t in D4Transform::all().skip(1) {
        let back = invert_d4(t, &r.restore(&apply_d4(t, img))?);
        worst = worst.max(back.max_abs_diff(&base));
    }
    Ok(worst)
}

pub fn is_d4_equivariant(r: &dyn Restorer, img: &Image, tol: f32) -> Result<bool, RestoreError> {
    Ok(d4_equivariance_error(r, img)? <= tol)
}
