//! Self-committees: run one restorer on several reversibly transformed copies
//! of the input, undo each transform on the output, and average.
//!
//! A member is a pair (g, (alpha, beta)). Its estimate is
//!
//! ```text
//! x = (g^-1(f(g(alpha*Y + beta))) - beta) / alpha
//! ```
//!
//! and the committee output is the uniform mean of the member estimates,
//! summed in member order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::image::Image;
use crate::restorer::{RestoreError, Restorer};
use crate::transforms::{
    apply_affine, apply_d4, invert_affine, invert_d4, AffineParams, D4Transform,
};

/// Span below which the linear-committee scales are treated as undefined.
pub const FLAT_SPAN_EPS: f32 = 1e-6;

#[derive(Debug, Error)]
pub enum CommitteeError {
    #[error("unknown committee name {0:?}")]
    UnknownName(String),
    #[error("scn-l needs input statistics (min, max, mean)")]
    MissingStats,
    #[error("committee has no members")]
    Empty,
    #[error("member {index} failed: {source}")]
    Member {
        index: usize,
        #[source]
        source: RestoreError,
    },
    #[error("member {index} has dims {found:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommitteeName {
    None,
    ScnF,
    ScnR,
    ScnFr,
    ScnI,
    ScnFull,
    ScnL,
}

impl CommitteeName {
    pub const ALL: [CommitteeName; 7] = [
        CommitteeName::None,
        CommitteeName::ScnF,
        CommitteeName::ScnR,
        CommitteeName::ScnFr,
        CommitteeName::ScnI,
        CommitteeName::ScnFull,
        CommitteeName::ScnL,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommitteeName::None => "none",
            CommitteeName::ScnF => "scn-f",
            CommitteeName::ScnR => "scn-r",
            CommitteeName::ScnFr => "scn-fr",
            CommitteeName::ScnI => "scn-i",
            CommitteeName::ScnFull => "scn-full",
            CommitteeName::ScnL => "scn-l",
        }
    }

    /// Number of members the preset produces (scn-l may fall back to 1).
    pub fn member_count(self) -> usize {
        match self {
            CommitteeName::None => 1,
            CommitteeName::ScnF | CommitteeName::ScnI => 2,
            CommitteeName::ScnR => 4,
            CommitteeName::ScnFr => 8,
            CommitteeName::ScnFull => 16,
            CommitteeName::ScnL => 3,
        }
    }
}

impl fmt::Display for CommitteeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommitteeName {
    type Err = CommitteeError;

    /// Accepts both the full identifiers ("scn-fr") and the short forms
    /// ("fr").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let short = lower.strip_prefix("scn-").unwrap_or(&lower);
        Ok(match short {
            "none" => CommitteeName::None,
            "f" => CommitteeName::ScnF,
            "r" => CommitteeName::ScnR,
            "fr" => CommitteeName::ScnFr,
            "i" => CommitteeName::ScnI,
            "full" => CommitteeName::ScnFull,
            "l" => CommitteeName::ScnL,
            _ => return Err(CommitteeError::UnknownName(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitteeMember {
    pub d4: D4Transform,
    pub affine: AffineParams,
}

impl CommitteeMember {
    pub fn new(d4: D4Transform, affine: AffineParams) -> Self {
        Self { d4, affine }
    }

    /// The transformed input g(alpha*Y + beta) this member feeds the restorer.
    pub fn member_input(&self, img: &Image) -> Image {
        apply_d4(self.d4, &apply_affine(self.affine, img))
    }

    /// Maps a restorer output back to the original frame and value range.
    pub fn member_output(&self, restored: &Image) -> Image {
        invert_affine(self.affine, &invert_d4(self.d4, restored))
    }

    pub fn evaluate(&self, r: &dyn Restorer, img: &Image) -> Result<Image, RestoreError> {
        let restored = r.restore(&self.member_input(img))?;
        let expected = self.d4.output_dims(img.height(), img.width());
        if restored.dims() != expected {
            return Err(RestoreError::ShapeChanged {
                input: expected,
                output: restored.dims(),
            });
        }
        Ok(self.member_output(&restored))
    }
}

impl fmt::Display for CommitteeMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} alpha={} beta={}",
            self.d4,
            self.affine.alpha(),
            self.affine.beta()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeSpec {
    pub name: CommitteeName,
    pub members: Vec<CommitteeMember>,
}

/// (min, max, mean) of the observed input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputStats {
    pub min: f32,
    pub max: f32,
    pub mean: f32,
}

impl InputStats {
    pub fn of(img: &Image) -> Self {
        let (min, max, mean) = img.stats();
        Self { min, max, mean }
    }
}

/// A built preset and, for degenerate scn-l inputs, the fallback warning.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub spec: CommitteeSpec,
    pub warning: Option<String>,
}

fn d4_members(ks: &[u8], affine: AffineParams) -> Vec<CommitteeMember> {
    ks.iter()
        .map(|&k| CommitteeMember::new(D4Transform::new(k).unwrap(), affine))
        .collect()
}

/// Builds one of the named presets. Member order is part of the contract:
/// scn-full lists the eight flip/rotation members for (1, 0) first, then the
/// eight for the inversion (-1, 1).
pub fn build_preset(
    name: CommitteeName,
    stats: Option<InputStats>,
) -> Result<Preset, CommitteeError> {
    let id = AffineParams::IDENTITY;
    let members = match name {
        CommitteeName::None => d4_members(&[1], id),
        CommitteeName::ScnF => d4_members(&[1, 2], id),
        CommitteeName::ScnR => d4_members(&[1, 3, 5, 7], id),
        CommitteeName::ScnFr => d4_members(&[1, 2, 3, 4, 5, 6, 7, 8], id),
        CommitteeName::ScnI => {
            let mut m = d4_members(&[1], id);
            m.extend(d4_members(&[1], AffineParams::INVERSION));
            m
        }
        CommitteeName::ScnFull => {
            let all = [1, 2, 3, 4, 5, 6, 7, 8];
            let mut m = d4_members(&all, id);
            m.extend(d4_members(&all, AffineParams::INVERSION));
            m
        }
        CommitteeName::ScnL => {
            let stats = stats.ok_or(CommitteeError::MissingStats)?;
            let span = stats.max - stats.min;
            if span.is_nan() || span <= FLAT_SPAN_EPS {
                return Ok(Preset {
                    spec: CommitteeSpec {
                        name,
                        members: d4_members(&[1], id),
                    },
                    warning: Some(format!(
                        "scn-l: input range {span} is (near) zero; falling back to the single member (1, 0)"
                    )),
                });
            }
            [span, 1.0, 1.0 / span]
                .into_iter()
                .map(|alpha| {
                    let beta = (1.0 - alpha) * stats.mean;
                    let affine =
                        AffineParams::new(alpha, beta).expect("span is positive and finite");
                    CommitteeMember::new(D4Transform::IDENTITY, affine)
                })
                .collect()
        }
    };
    Ok(Preset {
        spec: CommitteeSpec { name, members },
        warning: None,
    })
}

/// Uniform mean of equally sized images, summed in slice order.
pub fn average(members: &[Image]) -> Result<Image, CommitteeError> {
    let first = members.first().ok_or(CommitteeError::Empty)?;
    let dims = first.dims();
    let mut acc = first.data().to_vec();
    for (index, m) in members.iter().enumerate().skip(1) {
        if m.dims() != dims {
            return Err(CommitteeError::DimensionMismatch {
                index,
                expected: dims,
                found: m.dims(),
            });
        }
        for (a, &v) in acc.iter_mut().zip(m.data()) {
            *a += v;
        }
    }
    if members.len() > 1 {
        let n = members.len() as f32;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    Ok(Image::from_parts(dims.0, dims.1, acc))
}

/// Committee output and the per-member estimates, in member order.
#[derive(Debug, Clone)]
pub struct CommitteeOutput {
    pub output: Image,
    pub members: Vec<Image>,
}

/// Evaluates every member (in parallel) and averages in member order.
pub fn run_committee(
    spec: &CommitteeSpec,
    r: &dyn Restorer,
    img: &Image,
) -> Result<CommitteeOutput, CommitteeError> {
    if spec.members.is_empty() {
        return Err(CommitteeError::Empty);
    }
    let results: Vec<Result<Image, RestoreError>> = spec
        .members
        .par_iter()
        .map(|m| m.evaluate(r, img))
        .collect();
    // first failure in member order, independent of scheduling
    let members = results
        .into_iter()
        .enumerate()
        .map(|(index, res)| res.map_err(|source| CommitteeError::Member { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let output = average(&members)?;
    Ok(CommitteeOutput { output, members })
}

/// Largest per-pixel range across member estimates.
pub fn committee_spread(members: &[Image]) -> Result<f32, CommitteeError> {
    let first = members.first().ok_or(CommitteeError::Empty)?;
    for (index, m) in members.iter().enumerate() {
        if m.dims() != first.dims() {
            return Err(CommitteeError::DimensionMismatch {
                index,
                expected: first.dims(),
                found: m.dims(),
            });
        }
    }
    let mut spread = 0.0f32;
    for p in 0..first.len() {
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for m in members {
            let v = m.data()[p];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        spread = spread.max(hi - lo);
    }
    Ok(spread)
}
