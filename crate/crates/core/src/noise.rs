//! Addressable standard Gaussian deviates `ε_{j,k}`.
//!
//! Each level `j` is its own ChaCha stream under the path seed, and `ε_{j,k}`
//! is read from word position `2k` of that stream. A deviate therefore
//! depends only on `(seed, j, k)`, regardless of evaluation order.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseStream {
    seed: u64,
}

/// Maps 52 random bits to the open interval `(0, 1)`.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

fn inverse_normal(u: f64) -> f64 {
    Normal::standard().inverse_cdf(u)
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn level_rng(&self, j: u32) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(j as u64);
        rng
    }

    /// `ε_{j,k}`.
    pub fn deviate(&self, j: u32, k: u64) -> f64 {
        let mut rng = self.level_rng(j);
        rng.set_word_pos(2 * k as u128);
        inverse_normal(open_unit(rng.next_u64()))
    }

    /// `ε_{j,k}` for `k = 0, .., count - 1`.
    pub fn level(&self, j: u32, count: u64) -> Vec<f64> {
        let mut rng = self.level_rng(j);
        (0..count)
            .map(|_| inverse_normal(open_unit(rng.next_u64())))
            .collect()
    }
}
