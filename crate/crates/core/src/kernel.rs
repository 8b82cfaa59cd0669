//! Haar system and the fractional Haar kernel.
//!
//! The kernel `h^[λ](x) = ∫ (x - s)_+^{λ - 1/2} h(s) ds` of the Haar mother
//! wavelet `h` has the closed form
//!
//! ```text
//! h^[λ](x) = ((x)_+^β - 2 (x - 1/2)_+^β + (x - 1)_+^β) / β,   β = λ + 1/2
//! ```
//!
//! which vanishes on `(-∞, 0]` and decays like `(3 + |x|)^{λ - 3/2}`.

use crate::error::{Error, Result};

/// Envelope constant `c` for `|h^[λ](x)| <= c (3 + |x|)^{λ - 3/2}`.
///
/// A dense scan over `λ ∈ (0, 1)`, `x ∈ [-5, 1000]` gives a maximal ratio of
/// about 8.9; this is the next power of two.
pub const KERNEL_ENVELOPE_C: f64 = 16.0;

/// `y^β` for `y > 0`, zero otherwise.
#[inline]
pub fn pos_pow(y: f64, beta: f64) -> f64 {
    if y > 0.0 {
        y.powf(beta)
    } else {
        0.0
    }
}

/// Haar mother wavelet: `1` on `[0, 1/2)`, `-1` on `[1/2, 1)`, `0` elsewhere.
#[inline]
pub fn haar_mother(s: f64) -> f64 {
    if (0.0..0.5).contains(&s) {
        1.0
    } else if (0.5..1.0).contains(&s) {
        -1.0
    } else {
        0.0
    }
}

/// Dyadic index `(j, k)` with `0 <= k < 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HaarIndex {
    j: u32,
    k: u64,
}

impl HaarIndex {
    /// Largest supported level; `2^j` must fit comfortably in `u64` and `f64`.
    pub const MAX_LEVEL: u32 = 52;

    pub fn new(j: u32, k: u64) -> Result<Self> {
        if j > Self::MAX_LEVEL || k >= 1u64 << j {
            return Err(Error::InvalidIndex { j, k });
        }
        Ok(Self { j, k })
    }

    pub fn level(&self) -> u32 {
        self.j
    }

    pub fn position(&self) -> u64 {
        self.k
    }

    /// Left end `k / 2^j` of the support.
    pub fn dyadic_point(&self) -> f64 {
        self.k as f64 / (1u64 << self.j) as f64
    }
}

/// `h_{j,k}(s) = 2^{j/2} h(2^j s - k)`.
pub fn haar_jk(idx: HaarIndex, s: f64) -> f64 {
    let scale = (1u64 << idx.j) as f64;
    scale.sqrt() * haar_mother(scale * s - idx.k as f64)
}

/// Kernel exponent `λ`, restricted to the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelParam(f64);

impl KernelParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(Self(lambda))
        } else {
            Err(Error::config(
                "lambda",
                format!("{lambda} is not in the open interval (0, 1)"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<KernelParam> for f64 {
    fn from(p: KernelParam) -> f64 {
        p.0
    }
}

/// Closed-form fractional Haar kernel `h^[λ](x)`.
///
/// Exactly zero for `x <= 0`.
#[inline]
pub fn kernel(lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let beta = lambda + 0.5;
    (pos_pow(x, beta) - 2.0 * pos_pow(x - 0.5, beta) + pos_pow(x - 1.0, beta)) / beta
}

/// Polynomial decay envelope `c (3 + |x|)^{λ - 3/2}`.
#[inline]
pub fn decay_bound(lambda: f64, x: f64, c: f64) -> f64 {
    c * (3.0 + x.abs()).powf(lambda - 1.5)
}
