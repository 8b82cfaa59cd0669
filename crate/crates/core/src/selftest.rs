//! Oracle checks of the closed-form kernel and coefficients, shared by the
//! `selftest` command and the acceptance tests.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::hurst::HurstFamily;
use crate::kernel::{decay_bound, kernel, HaarIndex, KERNEL_ENVELOPE_C};
use crate::quadrature::{haar_coefficient_oracle, kernel_quadrature_oracle};
use crate::simulator::coefficient;

/// Range of `λ` covered by the built-in families.
pub const LAMBDA_RANGE: (f64, f64) = (0.1, 0.9);

const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }
}

/// Closed-form kernel against adaptive quadrature of its defining integral,
/// at random `(λ, x) ∈ LAMBDA_RANGE × [-2, 10]`.
pub fn kernel_vs_oracle(draws: usize, seed: u64, tol: f64) -> CheckOutcome {
    let mut rng = Uniform::new(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..draws {
        let lambda = rng.range(LAMBDA_RANGE.0, LAMBDA_RANGE.1);
        let x = rng.range(-2.0, 10.0);
        match kernel_quadrature_oracle(lambda, x, ORACLE_TOL) {
            Ok(reference) => worst = worst.max((kernel(lambda, x) - reference).abs()),
            Err(_) => failures += 1,
        }
    }
    CheckOutcome {
        name: "kernel matches quadrature",
        passed: failures == 0 && worst <= tol,
        detail: format!("{draws} draws, max |error| {worst:.3e}, quadrature failures {failures}"),
    }
}

/// Series coefficients against quadrature of the Haar integral, for random
/// families, levels `j ≤ 8`, positions and times.
pub fn coefficient_vs_oracle(draws: usize, seed: u64, tol: f64) -> CheckOutcome {
    let families = [
        HurstFamily::constant(0.3).expect("valid"),
        HurstFamily::linear(0.2, 0.45).expect("valid"),
        HurstFamily::sinusoidal(),
        HurstFamily::ramp(),
    ];
    let mut rng = Uniform::new(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..draws {
        let family = &families[rng.below(families.len() as u64) as usize];
        let j = rng.below(9) as u32;
        let k = rng.below(1 << j);
        let t = rng.unit();
        let idx = HaarIndex::new(j, k).expect("k < 2^j");
        let h = family.h_jk(idx).expect("family in range");
        match (
            coefficient(family, idx, t),
            haar_coefficient_oracle(h, j, k, t, ORACLE_TOL),
        ) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            _ => failures += 1,
        }
    }
    CheckOutcome {
        name: "coefficient identity",
        passed: failures == 0 && worst <= tol,
        detail: format!("{draws} draws, max |error| {worst:.3e}, failures {failures}"),
    }
}

/// At `λ = 1/2` the kernel is the hat function `min(x, 1 - x)` on `[0, 1]`.
pub fn hat_function(points: usize, tol: f64) -> CheckOutcome {
    let mut worst = 0.0f64;
    for i in 0..points {
        let x = -1.0 + 3.0 * i as f64 / (points - 1) as f64;
        let hat = if (0.0..=1.0).contains(&x) {
            x.min(1.0 - x)
        } else {
            0.0
        };
        worst = worst.max((kernel(0.5, x) - hat).abs());
    }
    CheckOutcome {
        name: "hat function at lambda = 1/2",
        passed: worst <= tol,
        detail: format!("{points} points on [-1, 2], max |error| {worst:.3e}"),
    }
}

/// `|h^[λ](x)| ≤ c (3 + |x|)^{λ - 3/2}` on a dense `(λ, x)` scan.
pub fn decay_envelope() -> CheckOutcome {
    let mut xs: Vec<f64> = (0..=20_000).map(|i| -10.0 + 0.01 * i as f64).collect();
    xs.extend((0..=400).map(|i| 190.0 * 10f64.powf(i as f64 / 100.0)));
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut checked = 0usize;
    for l in 1..=199 {
        let lambda = l as f64 / 200.0;
        for &x in &xs {
            let bound = decay_bound(lambda, x, KERNEL_ENVELOPE_C);
            let value = kernel(lambda, x).abs();
            worst_ratio = worst_ratio.max(value / bound);
            if value > bound {
                violations += 1;
            }
            checked += 1;
        }
    }
    CheckOutcome {
        name: "decay envelope",
        passed: violations == 0,
        detail: format!(
            "c = {KERNEL_ENVELOPE_C}, {checked} points, {violations} violations, max |h|/envelope {:.3}",
            worst_ratio * KERNEL_ENVELOPE_C
        ),
    }
}

/// The four oracle checks at their standard sizes.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        kernel_vs_oracle(1000, seed, 1e-8),
        coefficient_vs_oracle(500, seed, 1e-8),
        hat_function(10_000, 1e-14),
        decay_envelope(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        assert!(kernel_vs_oracle(50, 1, 1e-8).passed);
        assert!(coefficient_vs_oracle(50, 1, 1e-8).passed);
        assert!(hat_function(1000, 1e-14).passed);
    }

    #[test]
    fn outcome_line() {
        let o = CheckOutcome {
            name: "x",
            passed: false,
            detail: "d".into(),
        };
        assert_eq!(o.to_string(), "FAIL x: d");
    }
}
