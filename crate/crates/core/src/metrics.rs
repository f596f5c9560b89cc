//! Error metrics in normalized units. PSNR uses a peak of 1.0.

use thiserror::Error;

use crate::image::{quantize_u8, Image};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("IPSNR needs finite PSNR values, got {0} and {1}")]
    NonFinite(f64, f64),
}

fn check_dims(a: &Image, b: &Image) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::DimensionMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// Mean squared difference of two equal-length sample slices.
///
/// Squared terms are sorted before summation, so the result depends only on
/// the multiset of pixel pairs and not on their order.
pub fn mse_values<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len(), "sample count mismatch");
    let mut terms: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.into() - y.into();
            d * d
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>() / a.len() as f64
}

pub fn mse(a: &Image, b: &Image) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    Ok(mse_values(a.data(), b.data()))
}

/// Converts an MSE to dB; zero error maps to `f64::INFINITY`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64, MetricError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR after quantizing both images to 8-bit levels k/255.
pub fn psnr_u8(a: &Image, b: &Image) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = quantize_u8(x) as i64 - quantize_u8(y) as i64;
            (d * d) as u64
        })
        .sum();
    Ok(psnr_from_mse(sum as f64 / (255.0 * 255.0 * a.len() as f64)))
}

/// Gain of a committee over its base restorer, in dB.
pub fn ipsnr(committee_psnr: f64, base_psnr: f64) -> Result<f64, MetricError> {
    if !committee_psnr.is_finite() || !base_psnr.is_finite() {
        return Err(MetricError::NonFinite(committee_psnr, base_psnr));
    }
    Ok(committee_psnr - base_psnr)
}

/// Pearson correlation of the pixel values; `None` if either image is flat.
pub fn pearson(a: &Image, b: &Image) -> Result<Option<f64>, MetricError> {
    check_dims(a, b)?;
    let n = a.len() as f64;
    let ma = a.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some(sab / (saa.sqrt() * sbb.sqrt())))
}
