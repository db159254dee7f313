//! Seeded random number streams.
//!
//! All randomized estimators in this crate draw from [`SplitMix64`], a
//! counter-based generator: the `i`-th output is a fixed 64-bit hash of
//! `seed + (i+1)*GAMMA`. Together with the documented transforms below
//! (53-bit uniforms, Box-Muller normals consuming exactly two uniforms per
//! variate, Fisher-Yates shuffles, Lemire bounded integers) this pins the
//! exact byte stream of every simulation and Monte-Carlo draw, so independent
//! implementations can cross-check generator output checksums.

use alloc::vec::Vec;

/// Weyl increment of the SplitMix64 sequence.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford mix 13).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a tag path.
///
/// Used to give every (tree, repetition, feature, iteration, ...) its own
/// deterministic stream so work units can be evaluated in any order or on
/// any number of workers without changing results.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = master;
    for &t in tags {
        s = mix(s.wrapping_add(GAMMA) ^ mix(t.wrapping_add(GAMMA)));
    }
    s
}

/// Counter-based SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in `(0, 1]`; safe as a logarithm argument.
    #[inline]
    fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal variate via the Box-Muller cosine branch.
    ///
    /// Consumes exactly two uniforms per variate (the sine branch is
    /// discarded), keeping the stream layout independent of call patterns.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Uniform integer in `[0, bound)` via Lemire's multiply-shift.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// Uniform random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    /// `m` distinct indices drawn uniformly from `0..n` (partial Fisher-Yates),
    /// in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, m: usize) -> Vec<usize> {
        debug_assert!(m <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    }
}
