//! Test-time self-committees for image restoration.
//!
//! A single restorer `f` is run on several reversibly transformed copies of a
//! degraded image (the eight flips/rotations of the pixel grid, and pixel
//! value maps `alpha*Y + beta`); each output is mapped back and the results
//! are averaged. Around that core the crate provides reference restorers, a
//! small trainable CNN, deterministic degradations and PSNR tooling.

pub mod cli;
pub mod committee;
pub mod conv;
pub mod degrade;
pub mod image;
pub mod metrics;
pub mod restorer;
pub mod rng;
pub mod textures;
pub mod tinynet;
pub mod trainer;
pub mod transforms;

pub use committee::{
    build_preset, committee_spread, run_committee, CommitteeMember, CommitteeName, CommitteeSpec,
    InputStats,
};
pub use image::Image;
pub use restorer::{ConvFilterRestorer, IdentityRestorer, Restorer};
pub use tinynet::{NetworkWeights, TinyCnnRestorer};
pub use transforms::{AffineParams, D4Transform};
