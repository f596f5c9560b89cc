//! The eight flip/rotation operations of the square pixel grid, and the
//! pixel-value affine map used by the linear committees.
//!
//! Coordinate conventions:
//! - `FlipUD` sends pixel (r, c) to (H-1-r, c).
//! - A quarter turn is counterclockwise: source (r, c) of an HxW image lands
//!   at (W-1-c, r) of the WxH result.
//! - Composite operations rotate first, then flip.

use std::fmt;

use thiserror::Error;

use crate::image::Image;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("transform index {0} outside 1..=8")]
    BadIndex(u8),
    #[error("affine scale must be finite and nonzero, got {0}")]
    ZeroScale(f32),
    #[error("affine offset must be finite, got {0}")]
    NonFiniteOffset(f32),
}

/// One of the eight dihedral operations, indexed 1..=8:
///
/// | k | operation          |
/// |---|--------------------|
/// | 1 | original           |
/// | 2 | flipUD             |
/// | 3 | rot 90             |
/// | 4 | rot 90 + flipUD    |
/// | 5 | rot 180            |
/// | 6 | rot 180 + flipUD   |
/// | 7 | rot -90            |
/// | 8 | rot -90 + flipUD   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct D4Transform(u8);

impl D4Transform {
    pub const IDENTITY: D4Transform = D4Transform(1);
    pub const FLIP_UD: D4Transform = D4Transform(2);
    pub const ROT90: D4Transform = D4Transform(3);
    pub const ROT180: D4Transform = D4Transform(5);
    pub const ROT270: D4Transform = D4Transform(7);

    pub fn new(k: u8) -> Result<Self, TransformError> {
        if (1..=8).contains(&k) {
            Ok(Self(k))
        } else {
            Err(TransformError::BadIndex(k))
        }
    }

    pub fn all() -> impl Iterator<Item = D4Transform> {
        (1..=8).map(D4Transform)
    }

    #[inline]
    pub fn index(self) -> u8 {
        self.0
    }

    /// Counterclockwise quarter turns applied before the optional flip.
    #[inline]
    fn quarter_turns(self) -> u8 {
        (self.0 - 1) / 2
    }

    #[inline]
    fn flips(self) -> bool {
        self.0.is_multiple_of(2)
    }

    fn from_parts(quarter_turns: u8, flip: bool) -> Self {
        Self((quarter_turns % 4) * 2 + 1 + flip as u8)
    }

    /// True for the four operations that swap height and width.
    pub fn transposes(self) -> bool {
        self.quarter_turns() % 2 == 1
    }

    pub fn inverse(self) -> Self {
        if self.flips() {
            // rotate-then-flip elements are reflections, hence involutions
            self
        } else {
            Self::from_parts((4 - self.quarter_turns()) % 4, false)
        }
    }

    /// The single operation equal to applying `first` and then `self`.
    pub fn after(self, first: D4Transform) -> Self {
        // F R^q = R^-q F
        let q = if first.flips() {
            (4 - self.quarter_turns()) % 4
        } else {
            self.quarter_turns()
        };
        Self::from_parts(q + first.quarter_turns(), self.flips() ^ first.flips())
    }

    pub fn output_dims(self, height: usize, width: usize) -> (usize, usize) {
        if self.transposes() {
            (width, height)
        } else {
            (height, width)
        }
    }

    /// Destination coordinate of source pixel (r, c) in an `h`x`w` image.
    #[inline]
    pub fn map_coord(self, r: usize, c: usize, h: usize, w: usize) -> (usize, usize) {
        let (r2, c2) = match self.quarter_turns() {
            0 => (r, c),
            1 => (w - 1 - c, r),
            2 => (h - 1 - r, w - 1 - c),
            _ => (c, h - 1 - r),
        };
        if self.flips() {
            let (oh, _) = self.output_dims(h, w);
            (oh - 1 - r2, c2)
        } else {
            (r2, c2)
        }
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "original",
            2 => "flipud",
            3 => "rot90",
            4 => "rot90+flipud",
            5 => "rot180",
            6 => "rot180+flipud",
            7 => "rot-90",
            _ => "rot-90+flipud",
        }
    }
}

impl fmt::Display for D4Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

pub fn apply_d4(t: D4Transform, img: &Image) -> Image {
    if t == D4Transform::IDENTITY {
        return img.clone();
    }
    let (h, w) = img.dims();
    let (oh, ow) = t.output_dims(h, w);
    let src = img.data();
    let mut out = vec![0.0f32; src.len()];
    for r in 0..h {
        for c in 0..w {
            let (r2, c2) = t.map_coord(r, c, h, w);
            out[r2 * ow + c2] = src[r * w + c];
        }
    }
    Image::from_parts(oh, ow, out)
}

pub fn invert_d4(t: D4Transform, img: &Image) -> Image {
    apply_d4(t.inverse(), img)
}

/// Pixel-value map v -> alpha*v + beta with alpha nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    alpha: f32,
    beta: f32,
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams {
        alpha: 1.0,
        beta: 0.0,
    };
    pub const INVERSION: AffineParams = AffineParams {
        alpha: -1.0,
        beta: 1.0,
    };

    pub fn new(alpha: f32, beta: f32) -> Result<Self, TransformError> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(TransformError::ZeroScale(alpha));
        }
        if !beta.is_finite() {
            return Err(TransformError::NonFiniteOffset(beta));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn alpha(self) -> f32 {
        self.alpha
    }

    #[inline]
    pub fn beta(self) -> f32 {
        self.beta
    }

    pub fn is_identity(self) -> bool {
        self.alpha == 1.0 && self.beta == 0.0
    }
}

impl fmt::Display for AffineParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.alpha, self.beta)
    }
}

/// No clamping: values may leave [0, 1].
pub fn apply_affine(p: AffineParams, img: &Image) -> Image {
    if p.is_identity() {
        return img.clone();
    }
    img.map(|v| p.alpha * v + p.beta)
}

pub fn invert_affine(p: AffineParams, img: &Image) -> Image {
    if p.is_identity() {
        return img.clone();
    }
    img.map(|v| (v - p.beta) / p.alpha)
}
