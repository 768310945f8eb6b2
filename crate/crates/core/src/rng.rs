//! Seeded, platform-independent random numbers.
//!
//! Every stream is a PCG XSL-RR 128/64 generator (`rand_pcg::Pcg64`)
//! constructed as `Pcg64::new(STATE_BASE ^ seed, STREAM)`. Uniform doubles
//! take the top 53 bits of `next_u64`. Sub-streams for parallel work use
//! `splitmix64(seed ^ index)` as their seed.

use rand_core::Rng;
use rand_pcg::Pcg64;

const STATE_BASE: u128 = 0xcafe_f00d_d15e_a5e5_0000_0000_0000_0000;
const STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

#[derive(Debug, Clone)]
pub struct SeededRng(Pcg64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(Pcg64::new(STATE_BASE ^ u128::from(seed), STREAM))
    }

    /// Independent stream `index` derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi]` (returns `lo` when the range is degenerate).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
