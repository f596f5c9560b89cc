//! Pinned pseudo-random stream: xoshiro256++ seeded through splitmix64.
//!
//! Every random draw in the crate (noise, weight init, patch sampling,
//! synthetic textures) goes through this generator so that results can be
//! reproduced bit-for-bit from a seed in any language.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Derives an independent child seed from a base seed and two stream indices
/// (one splitmix64 step over the mixed inputs).
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let s = base ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xd1b5_4a32_d192_ed03);
    SplitMix64::seed_from_u64(s).next_u64()
}

#[derive(Debug, Clone)]
pub struct Xoshiro256pp(Xoshiro256PlusPlus);

impl Xoshiro256pp {
    /// State words are four consecutive splitmix64 outputs of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n) by 128-bit multiply-shift. `n` must be > 0.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// A pair of independent standard normals via Box-Muller.
    ///
    /// Consumes two uniforms `u1`, `u2`; the radius uses `1 - u1` so the
    /// logarithm argument lies in (0, 1].
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (r * theta.cos(), r * theta.sin())
    }
}
