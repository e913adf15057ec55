//! Seed derivation and uniform sampling over the Boolean cube.
//!
//! Every random stream in the crate comes from one 64-bit seed. A child
//! stream is obtained with [`derive_seed`]`(parent, index)`, which mixes the
//! pair through SplitMix64; the child seed then initialises a ChaCha8
//! generator. Batch `b` of an estimate, iteration `t` of a reconstruction
//! and similar sub-tasks each get `derive_seed(seed, b)` (or `t`), so work
//! can be split across threads without changing any result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Generator for stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Draws uniform points of `{-1,1}^n` as truth-table indices.
///
/// A point is packed as an integer whose most significant of `n` bits is
/// coordinate 1; bit value 1 means `+1`. Random words are consumed `n`
/// bits at a time so small dimensions do not waste entropy.
pub struct CubeSampler<R> {
    rng: R,
    n: usize,
    buf: u64,
    left: u32,
}

impl<R: RngCore> CubeSampler<R> {
    pub fn new(rng: R, n: usize) -> Self {
        Self {
            rng,
            n,
            buf: 0,
            left: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Next point as a packed index; only valid for `n <= 64`.
    #[inline]
    pub fn next_index(&mut self) -> u64 {
        debug_assert!(self.n <= 64);
        let n = self.n as u32;
        if n == 64 {
            return self.rng.next_u64();
        }
        if self.left < n {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let idx = self.buf & ((1u64 << n) - 1);
        self.buf = self.buf.checked_shr(n).unwrap_or(0);
        self.left -= n;
        idx
    }

    /// Next point written as `±1` entries into `x` (any dimension).
    pub fn next_point(&mut self, x: &mut [i8]) {
        debug_assert_eq!(x.len(), self.n);
        for chunk in x.chunks_mut(64) {
            let word = self.rng.next_u64();
            for (k, xi) in chunk.iter_mut().enumerate() {
                *xi = if (word >> k) & 1 == 1 { 1 } else { -1 };
            }
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Value of coordinate `i` (1-based) of the point with table index `idx`.
#[inline]
pub fn coord(idx: u64, n: usize, i: usize) -> i8 {
    if (idx >> (n - i)) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Unpacks a table index into a `±1` vector.
pub fn unpack(idx: u64, n: usize, x: &mut [i8]) {
    for (k, xi) in x.iter_mut().enumerate() {
        *xi = coord(idx, n, k + 1);
    }
}
