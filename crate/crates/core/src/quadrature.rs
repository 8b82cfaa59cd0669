//! Adaptive Gauss-Kronrod quadrature with singularity splitting.
//!
//! Used only as an independent oracle for the closed-form kernel and series
//! coefficients; nothing on the simulation path depends on it.

use std::fmt;

/// Kronrod abscissae for the 15-point rule on `[-1, 1]` (non-negative half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the embedded 7-point rule (odd Kronrod nodes).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Default cap on the number of subintervals the adaptive scheme may create.
pub const DEFAULT_SUBDIVISIONS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureError {
    pub estimate: f64,
    pub error: f64,
    pub subdivisions: usize,
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "quadrature did not converge after {} subdivisions (estimate {}, error {})",
            self.subdivisions, self.estimate, self.error
        )
    }
}

impl std::error::Error for QuadratureError {}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate falls below `tol` or `max_subdivisions` is reached.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if total_error <= tol {
            return Ok(segments.iter().map(|s| s.value).sum());
        }
        if segments.len() >= max_subdivisions {
            return Err(QuadratureError {
                estimate: segments.iter().map(|s| s.value).sum(),
                error: total_error,
                subdivisions: segments.len(),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(QuadratureError {
                estimate: segments.iter().map(|s| s.value).sum::<f64>() + seg.value,
                error: total_error,
                subdivisions: segments.len() + 1,
            });
        }
        segments.push(gk15(&f, seg.a, mid));
        segments.push(gk15(&f, mid, seg.b));
    }
}

/// Piece `[start, end)` on which a step function takes the value `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPiece {
    pub start: f64,
    pub end: f64,
    pub weight: f64,
}

/// `∫ (x - s)_+^{exponent} g(s) ds` for a step function `g` given by `pieces`.
///
/// Each piece is clipped at `s = x`. Where a piece reaches the endpoint
/// `s = x`, the last `δ` of it is integrated through the antiderivative
/// `δ^{e+1} / (e+1)` and the remainder adaptively, which keeps the
/// integrable singularity (exponent in `(-1, 0)`) away from the rule's nodes.
pub fn power_step_integral(
    x: f64,
    exponent: f64,
    pieces: &[StepPiece],
    tol: f64,
) -> Result<f64, QuadratureError> {
    assert!(exponent > -1.0, "integrand not integrable at s = x");
    let active: Vec<&StepPiece> = pieces
        .iter()
        .filter(|p| p.weight != 0.0 && p.start < x && p.start < p.end)
        .collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let piece_tol = tol / active.len() as f64;
    let mut total = 0.0;
    for piece in active {
        let upper = piece.end.min(x);
        let integrand = |s: f64| {
            let u = x - s;
            if u > 0.0 {
                u.powf(exponent)
            } else {
                0.0
            }
        };
        let smooth_part;
        let mut tail = 0.0;
        if upper == x {
            let delta = (upper - piece.start) * 1e-6;
            tail = delta.powf(exponent + 1.0) / (exponent + 1.0);
            smooth_part = integrate(
                integrand,
                piece.start,
                upper - delta,
                piece_tol,
                DEFAULT_SUBDIVISIONS,
            )?;
        } else {
            smooth_part = integrate(
                integrand,
                piece.start,
                upper,
                piece_tol,
                DEFAULT_SUBDIVISIONS,
            )?;
        }
        total += piece.weight * (smooth_part + tail);
    }
    Ok(total)
}

/// Quadrature oracle for the fractional Haar kernel `h^[λ](x)`.
pub fn kernel_quadrature_oracle(lambda: f64, x: f64, tol: f64) -> Result<f64, QuadratureError> {
    let pieces = [
        StepPiece {
            start: 0.0,
            end: 0.5,
            weight: 1.0,
        },
        StepPiece {
            start: 0.5,
            end: 1.0,
            weight: -1.0,
        },
    ];
    power_step_integral(x, lambda - 0.5, &pieces, tol)
}

/// Quadrature oracle for `∫_0^1 (t - s)_+^{λ - 1/2} h_{j,k}(s) ds`.
pub fn haar_coefficient_oracle(
    lambda: f64,
    j: u32,
    k: u64,
    t: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    let scale = (1u64 << j) as f64;
    let amp = scale.sqrt();
    let left = k as f64 / scale;
    let mid = (k as f64 + 0.5) / scale;
    let right = (k as f64 + 1.0) / scale;
    let pieces = [
        StepPiece {
            start: left,
            end: mid,
            weight: amp,
        },
        StepPiece {
            start: mid,
            end: right,
            weight: -amp,
        },
    ];
    power_step_integral(t, lambda - 0.5, &pieces, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 10).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn integrates_oscillatory_function() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 100).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| 1.0 / x.abs().sqrt(), -1.0, 1.0, 1e-14, 8).unwrap_err();
        assert_eq!(err.subdivisions, 8);
    }

    #[test]
    fn singular_power_against_antiderivative() {
        // ∫_0^1 (1 - s)^{-0.3} ds = 1 / 0.7
        let pieces = [StepPiece {
            start: 0.0,
            end: 1.0,
            weight: 1.0,
        }];
        let v = power_step_integral(1.0, -0.3, &pieces, 1e-12).unwrap();
        assert!((v - 1.0 / 0.7).abs() < 1e-10);
    }

    #[test]
    fn oracle_examples() {
        let v = kernel_quadrature_oracle(0.5, 0.5, 1e-10).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
        assert_eq!(kernel_quadrature_oracle(0.8, -1.0, 1e-10).unwrap(), 0.0);
    }
}
