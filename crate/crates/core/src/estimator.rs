//! Hurst-function estimation by generalized quadratic variations.
//!
//! For resolution `N`, the increments `d_{N,k} = Σ_l a_l X((k + l) / N)`
//! use the binomial filter `a_l = (-1)^{L-l} C(L, l)`. On an interval `I`,
//! `V_N(I)` is the mean of `d_{N,k}^2` over `k / N ∈ I`, and
//!
//! ```text
//! Ĥ(I) = clamp(log_{Q^2}(V_N(I) / V_{QN}(I)), 0, 1)
//! ```

use crate::error::{Error, Result};
use crate::hurst::HurstFamily;
use crate::loess::{loess_smooth, DEFAULT_SPAN};
use crate::simulator::{evaluate_at, PathSample};

/// Estimator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Sampling resolution `N` of the coarse variation.
    pub resolution: usize,
    /// Dilation factor `Q`; the fine variation uses resolution `Q N`.
    pub dilation: usize,
    /// Filter order `L`.
    pub order: usize,
    /// Number `P` of equal subintervals of `[0, 1]`.
    pub intervals: usize,
    /// LOESS span for the smoothed curve.
    pub span: f64,
}

impl EstimatorConfig {
    /// `Q = 2`, `L = 2`, `P = 100`, with `Q N` equal to the full grid
    /// resolution `2^n`.
    pub fn for_grid(grid_exponent: u32) -> Self {
        Self {
            resolution: (1usize << grid_exponent) / 2,
            dilation: 2,
            order: 2,
            intervals: 100,
            span: DEFAULT_SPAN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dilation < 2 {
            return Err(Error::config(
                "Q",
                format!("{} must be at least 2", self.dilation),
            ));
        }
        if self.order < 2 {
            return Err(Error::config(
                "L",
                format!("{} must be at least 2", self.order),
            ));
        }
        if self.resolution < self.order {
            return Err(Error::config(
                "N",
                format!("{} must be at least L = {}", self.resolution, self.order),
            ));
        }
        if self.intervals == 0 {
            return Err(Error::config("P", "must be positive"));
        }
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(Error::config(
                "span",
                format!("{} is not in (0, 1]", self.span),
            ));
        }
        Ok(())
    }
}

/// Filter taps `a_l = (-1)^{L-l} C(L, l)` as exact integers.
pub fn increment_filter_exact(order: usize) -> Vec<i64> {
    let mut taps = Vec::with_capacity(order + 1);
    let mut binom: i64 = 1;
    for l in 0..=order {
        if l > 0 {
            binom = binom * (order - l + 1) as i64 / l as i64;
        }
        let sign = if (order - l).is_multiple_of(2) { 1 } else { -1 };
        taps.push(sign * binom);
    }
    taps
}

/// Filter taps `(a_0, .., a_L)`.
pub fn increment_filter(order: usize) -> Vec<f64> {
    increment_filter_exact(order)
        .into_iter()
        .map(|a| a as f64)
        .collect()
}

/// Something that can report `X(numer / denom)`.
pub trait PathSource {
    fn value(&self, numer: u64, denom: u64) -> Result<f64>;

    /// `X(i / resolution)` for `i = 0..=resolution`.
    fn samples(&self, resolution: usize) -> Result<Vec<f64>> {
        (0..=resolution as u64)
            .map(|i| self.value(i, resolution as u64))
            .collect()
    }
}

impl PathSource for PathSample {
    fn value(&self, numer: u64, denom: u64) -> Result<f64> {
        Ok(self.values[self.grid_index(numer, denom)?])
    }

    fn samples(&self, resolution: usize) -> Result<Vec<f64>> {
        let stride = self.grid_index(1, resolution as u64)?;
        Ok(self.values.iter().step_by(stride.max(1)).copied().collect())
    }
}

/// Evaluates the truncated series directly at any requested time.
pub struct SeriesSource<'a> {
    pub family: &'a HurstFamily,
    pub levels: u32,
    pub seed: u64,
}

impl PathSource for SeriesSource<'_> {
    fn value(&self, numer: u64, denom: u64) -> Result<f64> {
        Ok(evaluate_at(
            self.family,
            self.levels,
            self.seed,
            &[numer as f64 / denom as f64],
        )?[0])
    }

    fn samples(&self, resolution: usize) -> Result<Vec<f64>> {
        let times: Vec<f64> = (0..=resolution)
            .map(|i| i as f64 / resolution as f64)
            .collect();
        evaluate_at(self.family, self.levels, self.seed, &times)
    }
}

/// Adapts a closure `t -> X(t)`.
pub struct FnSource<F>(pub F);

impl<F: Fn(f64) -> f64> PathSource for FnSource<F> {
    fn value(&self, numer: u64, denom: u64) -> Result<f64> {
        Ok((self.0)(numer as f64 / denom as f64))
    }
}

/// `d_{N,k}` for `k = 0..=N-L`.
pub fn generalized_increments<S: PathSource + ?Sized>(
    source: &S,
    resolution: usize,
    order: usize,
) -> Result<Vec<f64>> {
    if order < 2 || resolution < order {
        return Err(Error::config(
            "N",
            format!("need L >= 2 and N >= L, got N = {resolution}, L = {order}"),
        ));
    }
    let taps = increment_filter(order);
    let x = source.samples(resolution)?;
    Ok(x.windows(order + 1)
        .map(|w| w.iter().zip(&taps).map(|(v, a)| a * v).sum())
        .collect())
}

/// Subinterval of `[0, 1]`; the right end is included only when `closed_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub closed_end: bool,
}

impl Interval {
    pub fn closed(start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            closed_end: true,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && (t < self.end || (self.closed_end && t == self.end))
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// `P` equal cells `[p/P, (p+1)/P)`, the last one closed at `1`.
pub fn partition(count: usize) -> Vec<Interval> {
    (0..count)
        .map(|p| Interval {
            start: p as f64 / count as f64,
            end: (p + 1) as f64 / count as f64,
            closed_end: p + 1 == count,
        })
        .collect()
}

/// `V_N(I)`: mean of `d_{N,k}^2` over the `k` with `k / N ∈ I`.
pub fn quadratic_variation(
    increments: &[f64],
    resolution: usize,
    interval: &Interval,
) -> Result<f64> {
    let mut count = 0usize;
    let mut sum = 0.0;
    for (k, d) in increments.iter().enumerate() {
        if interval.contains(k as f64 / resolution as f64) {
            count += 1;
            sum += d * d;
        }
    }
    if count == 0 {
        return Err(Error::EmptyInterval {
            resolution,
            start: interval.start,
            end: interval.end,
        });
    }
    Ok(sum / count as f64)
}

/// Number of `k` in `0..len` with `k / N ∈ I`.
pub fn interval_support(len: usize, resolution: usize, interval: &Interval) -> usize {
    (0..len)
        .filter(|&k| interval.contains(k as f64 / resolution as f64))
        .count()
}

/// `clamp(log_{Q^2}(coarse / fine), 0, 1)`, with `1` when only the fine
/// variation vanishes and `0` when both do.
pub fn hurst_from_variations(coarse: f64, fine: f64, dilation: usize) -> f64 {
    if fine == 0.0 {
        return if coarse > 0.0 { 1.0 } else { 0.0 };
    }
    let raw = (coarse / fine).ln() / (2.0 * (dilation as f64).ln());
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(0.0, 1.0)
    }
}

/// Per-interval Hurst estimates, raw and LOESS-smoothed.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub interval_mids: Vec<f64>,
    pub h_raw: Vec<f64>,
    pub h_smooth: Vec<f64>,
    pub config: EstimatorConfig,
    /// Intervals on which both variations vanished.
    pub degenerate: Vec<usize>,
}

/// Estimates `H` on each interval from samples at resolutions `N` and `Q N`.
///
/// With fewer than three intervals (or a span covering fewer than two of
/// them) no smoothing is possible and `h_smooth` repeats `h_raw`.
pub fn estimate_hurst<S: PathSource + ?Sized>(
    source: &S,
    config: &EstimatorConfig,
    intervals: &[Interval],
) -> Result<EstimateSeries> {
    config.validate()?;
    let coarse_res = config.resolution;
    let fine_res = config.resolution * config.dilation;
    let coarse = generalized_increments(source, coarse_res, config.order)?;
    let fine = generalized_increments(source, fine_res, config.order)?;

    let mut h_raw = Vec::with_capacity(intervals.len());
    let mut degenerate = Vec::new();
    for (p, interval) in intervals.iter().enumerate() {
        let vn = quadratic_variation(&coarse, coarse_res, interval)?;
        let vqn = quadratic_variation(&fine, fine_res, interval)?;
        if vn == 0.0 && vqn == 0.0 {
            degenerate.push(p);
        }
        h_raw.push(hurst_from_variations(vn, vqn, config.dilation));
    }
    let interval_mids: Vec<f64> = intervals.iter().map(Interval::midpoint).collect();
    let smoothable = intervals.len() >= 3 && (config.span * intervals.len() as f64).ceil() >= 2.0;
    let h_smooth = if smoothable {
        loess_smooth(&interval_mids, &h_raw, config.span)?
    } else {
        h_raw.clone()
    };
    Ok(EstimateSeries {
        interval_mids,
        h_raw,
        h_smooth,
        config: *config,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_examples() {
        assert_eq!(increment_filter(2), vec![1.0, -2.0, 1.0]);
        assert_eq!(increment_filter(3), vec![-1.0, 3.0, -3.0, 1.0]);
        let a = increment_filter_exact(2);
        assert_eq!(a.iter().sum::<i64>(), 0);
        assert_eq!(
            a.iter().enumerate().map(|(l, a)| l as i64 * a).sum::<i64>(),
            0
        );
    }

    #[test]
    fn increments_examples() {
        let constant = generalized_increments(&FnSource(|_| 4.2), 16, 2).unwrap();
        assert_eq!(constant.len(), 15);
        assert!(constant.iter().all(|&d| d == 0.0));
        let affine = generalized_increments(&FnSource(|t| 3.0 * t + 1.0), 16, 2).unwrap();
        assert!(affine.iter().all(|d| d.abs() < 1e-14));
        let quad = generalized_increments(&FnSource(|t| t * t), 4, 2).unwrap();
        assert_eq!(quad.len(), 3);
        for d in quad {
            assert!((d - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn increments_reject_bad_order() {
        assert!(generalized_increments(&FnSource(|t| t), 4, 1).is_err());
        assert!(generalized_increments(&FnSource(|t| t), 2, 3).is_err());
    }

    #[test]
    fn variation_examples() {
        let all = Interval::closed(0.0, 1.0);
        assert_eq!(quadratic_variation(&[0.0; 5], 6, &all).unwrap(), 0.0);
        assert_eq!(quadratic_variation(&[1.0, -1.0], 3, &all).unwrap(), 1.0);
        assert_eq!(interval_support(7, 8, &Interval::closed(0.0, 0.25)), 3);
        assert!(matches!(
            quadratic_variation(&[1.0, 1.0], 2, &Interval::closed(0.7, 0.9)),
            Err(Error::EmptyInterval { .. })
        ));
    }

    #[test]
    fn partition_cells_are_disjoint() {
        let cells = partition(10);
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            assert_eq!(cells.iter().filter(|c| c.contains(t)).count(), 1, "t={t}");
        }
    }

    #[test]
    fn estimate_formula_examples() {
        assert_eq!(hurst_from_variations(3.0, 3.0, 2), 0.0);
        for h in [0.1, 0.35, 0.5, 0.9] {
            let ratio = 2f64.powf(2.0 * h);
            assert!((hurst_from_variations(ratio, 1.0, 2) - h).abs() < 1e-15);
        }
        assert_eq!(hurst_from_variations(0.5, 1.0, 2), 0.0);
        assert_eq!(hurst_from_variations(1.0, 0.0, 2), 1.0);
        assert_eq!(hurst_from_variations(0.0, 0.0, 2), 0.0);
        assert_eq!(hurst_from_variations(1e6, 1.0, 2), 1.0);
    }

    #[test]
    fn flat_path_is_degenerate() {
        let cfg = EstimatorConfig {
            resolution: 64,
            dilation: 2,
            order: 2,
            intervals: 4,
            span: 1.0,
        };
        let est = estimate_hurst(&FnSource(|_| 1.0), &cfg, &partition(4)).unwrap();
        assert_eq!(est.h_raw, vec![0.0; 4]);
        assert_eq!(est.degenerate, vec![0, 1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EstimatorConfig::for_grid(10);
        assert_eq!(cfg.resolution, 512);
        assert!(cfg.validate().is_ok());
        cfg.dilation = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = EstimatorConfig::for_grid(10);
        cfg.resolution = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn too_fine_partition_is_a_config_error() {
        let cfg = EstimatorConfig {
            resolution: 8,
            dilation: 2,
            order: 2,
            intervals: 50,
            span: 0.25,
        };
        let err = estimate_hurst(&FnSource(|t| t), &cfg, &partition(50)).unwrap_err();
        assert!(err.is_config_error());
    }
}
