//! Deterministic degradation operators: additive white Gaussian noise and the
//! box-down / bicubic-up pipeline that produces super-resolution inputs.

use thiserror::Error;

use crate::conv::reflect_index;
use crate::image::Image;
use crate::rng::Xoshiro256pp;

#[derive(Debug, Error, PartialEq)]
pub enum DegradeError {
    #[error("noise sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error("scale factor must be 2, 3 or 4, got {0}")]
    BadFactor(usize),
    #[error("image {height}x{width} smaller than scale factor {factor}")]
    TooSmall {
        height: usize,
        width: usize,
        factor: usize,
    },
}

/// Gaussian noise level, quoted on the 0-255 scale, and its stream seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, DegradeError> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(DegradeError::BadSigma(sigma));
        }
        Ok(Self { sigma, seed })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleSpec {
    factor: usize,
}

impl ScaleSpec {
    pub fn new(factor: usize) -> Result<Self, DegradeError> {
        if (2..=4).contains(&factor) {
            Ok(Self { factor })
        } else {
            Err(DegradeError::BadFactor(factor))
        }
    }

    pub fn factor(&self) -> usize {
        self.factor
    }
}

/// Adds i.i.d. N(0, (sigma/255)^2) noise in row-major order, two pixels per
/// Box-Muller pair. The output is not clamped.
pub fn add_awgn(img: &Image, spec: NoiseSpec) -> Image {
    if spec.sigma == 0.0 {
        return img.clone();
    }
    let std = spec.sigma / 255.0;
    let mut rng = Xoshiro256pp::from_seed(spec.seed);
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    for pair in src.chunks(2) {
        let (z0, z1) = rng.normal_pair();
        out.push((pair[0] as f64 + std * z0) as f32);
        if let Some(&v) = pair.get(1) {
            out.push((v as f64 + std * z1) as f32);
        }
    }
    Image::from_parts(img.height(), img.width(), out)
}

/// Catmull-Rom cubic (a = -0.5).
fn cubic_weight(d: f64) -> f64 {
    const A: f64 = -0.5;
    let d = d.abs();
    if d <= 1.0 {
        ((A + 2.0) * d - (A + 3.0)) * d * d + 1.0
    } else if d < 2.0 {
        ((A * d - 5.0 * A) * d + 8.0 * A) * d - 4.0 * A
    } else {
        0.0
    }
}

/// Four source taps and normalized weights for each of `dst_len` outputs
/// when upsampling an axis of length `src_len` by `factor` (pixel-center
/// aligned).
fn upsample_taps(src_len: usize, dst_len: usize, factor: usize) -> Vec<([usize; 4], [f64; 4])> {
    (0..dst_len)
        .map(|x| {
            let pos = (x as f64 + 0.5) / factor as f64 - 0.5;
            let base = pos.floor();
            let t = pos - base;
            let base = base as isize;
            let mut idx = [0usize; 4];
            let mut wts = [0f64; 4];
            for j in 0..4 {
                idx[j] = reflect_index(base - 1 + j as isize, src_len);
                wts[j] = cubic_weight(t - (j as f64 - 1.0));
            }
            let sum: f64 = wts.iter().sum();
            wts.iter_mut().for_each(|w| *w /= sum);
            (idx, wts)
        })
        .collect()
}

/// Crops to a multiple of the factor, box-averages each factor x factor
/// block, then bicubic-upsamples back to the cropped size.
pub fn make_sisr_input(img: &Image, spec: ScaleSpec) -> Result<Image, DegradeError> {
    let f = spec.factor;
    let (h, w) = img.dims();
    if h < f || w < f {
        return Err(DegradeError::TooSmall {
            height: h,
            width: w,
            factor: f,
        });
    }
    let (lh, lw) = (h / f, w / f);
    let (ch, cw) = (lh * f, lw * f);

    let area = (f * f) as f64;
    let mut low = vec![0f64; lh * lw];
    for r in 0..lh {
        for c in 0..lw {
            let mut acc = 0f64;
            for dy in 0..f {
                for dx in 0..f {
                    acc += img.get(r * f + dy, c * f + dx) as f64;
                }
            }
            low[r * lw + c] = acc / area;
        }
    }

    let col_taps = upsample_taps(lw, cw, f);
    let mut wide = vec![0f64; lh * cw];
    for r in 0..lh {
        let row = &low[r * lw..(r + 1) * lw];
        for (c, (idx, wts)) in col_taps.iter().enumerate() {
            wide[r * cw + c] = (0..4).map(|j| wts[j] * row[idx[j]]).sum();
        }
    }

    let row_taps = upsample_taps(lh, ch, f);
    let mut out = Vec::with_capacity(ch * cw);
    for (idx, wts) in &row_taps {
        for c in 0..cw {
            let v: f64 = (0..4).map(|j| wts[j] * wide[idx[j] * cw + c]).sum();
            out.push(v as f32);
        }
    }
    Ok(Image::from_parts(ch, cw, out))
}
