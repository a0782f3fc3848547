//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from [`SeededRng`], whose
//! output is fully determined by a `u64` seed:
//!
//! * generator: xoshiro256** with its state expanded from the seed by
//!   SplitMix64 (the reference seeding procedure of the xoshiro family);
//! * uniform on `[0, 1)`: the top 53 bits of a 64-bit draw times `2^-53`;
//! * standard normal: Box–Muller on two uniforms `u1, u2`, using
//!   `r = sqrt(-2 ln(1 - u1))`, emitting `r cos(2π u2)` first and caching
//!   `r sin(2π u2)` for the next call;
//! * fair coin: the most significant bit of a 64-bit draw;
//! * uniform index in `0..m`: the high 64 bits of `draw * m` (128-bit
//!   multiply).
//!
//! Any implementation that follows the list above reproduces the same
//! datasets and block-selection sequences.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        // 1 - u1 lies in (0, 1], so the logarithm is finite.
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    #[inline]
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform index in `0..m`. Panics if `m == 0`.
    #[inline]
    pub fn index(&mut self, m: usize) -> usize {
        assert!(m > 0, "index range must be non-empty");
        ((self.next_u64() as u128 * m as u128) >> 64) as usize
    }
}
