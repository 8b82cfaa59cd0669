//! Sequences of Hurst functions `H_j : [0, 1] → [h_lo, h_hi]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::HaarIndex;

type LevelFn = dyn Fn(u32, f64) -> f64 + Send + Sync;
type LimitFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A sequence of Lipschitz Hurst functions together with its range bounds
/// and, when known in closed form, the pointwise limit `H(t) = liminf H_j(t)`.
#[derive(Clone)]
pub struct HurstFamily {
    name: String,
    params: String,
    h_lo: f64,
    h_hi: f64,
    level_invariant: bool,
    evaluator: Arc<LevelFn>,
    limit: Option<Arc<LimitFn>>,
    exact_lipschitz: Option<Arc<dyn Fn(u32) -> f64 + Send + Sync>>,
}

impl fmt::Debug for HurstFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HurstFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("h_lo", &self.h_lo)
            .field("h_hi", &self.h_hi)
            .field("level_invariant", &self.level_invariant)
            .finish_non_exhaustive()
    }
}

fn check_bounds(h_lo: f64, h_hi: f64) -> Result<()> {
    if !(h_lo > 0.0 && h_lo <= h_hi && h_hi < 1.0) {
        return Err(Error::config(
            "family",
            format!("range [{h_lo}, {h_hi}] must satisfy 0 < h_lo <= h_hi < 1"),
        ));
    }
    Ok(())
}

impl HurstFamily {
    /// `H_j(t) ≡ h` for every level.
    pub fn constant(h: f64) -> Result<Self> {
        check_bounds(h, h)?;
        Ok(Self {
            name: "constant".into(),
            params: format!("h={h}"),
            h_lo: h,
            h_hi: h,
            level_invariant: true,
            evaluator: Arc::new(move |_, _| h),
            limit: Some(Arc::new(move |_| h)),
            exact_lipschitz: Some(Arc::new(move |_| h)),
        })
    }

    /// `H_j(t) = a + b t` for every level.
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = if b >= 0.0 { (a, a + b) } else { (a + b, a) };
        check_bounds(lo, hi)?;
        let f = move |t: f64| a + b * t;
        Ok(Self {
            name: "linear".into(),
            params: format!("a={a},b={b}"),
            h_lo: lo,
            h_hi: hi,
            level_invariant: true,
            evaluator: Arc::new(move |_, t| f(t)),
            limit: Some(Arc::new(f)),
            exact_lipschitz: Some(Arc::new(move |_| a.abs().max((a + b).abs()) + b.abs())),
        })
    }

    /// `H_j(t) = 0.5 - 0.4 sin(6πt)` for every level.
    pub fn sinusoidal() -> Self {
        let f = |t: f64| 0.5 - 0.4 * (6.0 * PI * t).sin();
        Self {
            name: "sinusoidal".into(),
            params: String::new(),
            h_lo: 0.5 - 0.4,
            h_hi: 0.5 + 0.4,
            level_invariant: true,
            evaluator: Arc::new(move |_, t| f(t)),
            limit: Some(Arc::new(f)),
            exact_lipschitz: Some(Arc::new(|_| 0.9 + 2.4 * PI)),
        }
    }

    /// Piecewise-linear ramps of slope `j/2` between `1/4` and `3/4`,
    /// steepening towards a jump at `t = 1/2`.
    ///
    /// `H_0 ≡ 1/2`; for `j >= 1` the ramp spans `[1/2 - 1/(2j), 1/2 + 1/(2j)]`.
    pub fn ramp() -> Self {
        Self {
            name: "ramp".into(),
            params: String::new(),
            h_lo: 0.25,
            h_hi: 0.75,
            level_invariant: false,
            evaluator: Arc::new(ramp_level),
            limit: Some(Arc::new(|t| if t <= 0.5 { 0.25 } else { 0.75 })),
            exact_lipschitz: Some(Arc::new(
                |j| {
                    if j == 0 {
                        0.5
                    } else {
                        0.75 + j as f64 / 2.0
                    }
                },
            )),
        }
    }

    /// User-supplied family. `evaluator(j, t)` must stay inside `[h_lo, h_hi]`;
    /// violations are reported when the family is sampled.
    pub fn custom<F>(name: impl Into<String>, h_lo: f64, h_hi: f64, evaluator: F) -> Result<Self>
    where
        F: Fn(u32, f64) -> f64 + Send + Sync + 'static,
    {
        check_bounds(h_lo, h_hi)?;
        Ok(Self {
            name: name.into(),
            params: String::new(),
            h_lo,
            h_hi,
            level_invariant: false,
            evaluator: Arc::new(evaluator),
            limit: None,
            exact_lipschitz: None,
        })
    }

    /// Attach the closed-form limit function.
    pub fn with_limit<F>(mut self, limit: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.limit = Some(Arc::new(limit));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Parameters in `key=value` form, empty for parameter-free families.
    pub fn params(&self) -> &str {
        &self.params
    }

    pub fn h_lo(&self) -> f64 {
        self.h_lo
    }

    pub fn h_hi(&self) -> f64 {
        self.h_hi
    }

    /// True when `H_j` does not depend on `j`.
    pub fn is_level_invariant(&self) -> bool {
        self.level_invariant
    }

    pub fn has_limit(&self) -> bool {
        self.limit.is_some()
    }

    /// Raw `H_j(t)`, unchecked.
    pub fn eval(&self, j: u32, t: f64) -> f64 {
        (self.evaluator)(j, t)
    }

    /// `H_j(t)`, checked against the declared range.
    pub fn eval_checked(&self, j: u32, t: f64) -> Result<f64> {
        let value = self.eval(j, t);
        if value >= self.h_lo && value <= self.h_hi {
            Ok(value)
        } else {
            Err(Error::FamilyRange {
                name: self.name.clone(),
                j,
                t,
                value,
                lo: self.h_lo,
                hi: self.h_hi,
            })
        }
    }

    /// `H_{j,k} = H_j(k / 2^j)`.
    pub fn h_jk(&self, idx: HaarIndex) -> Result<f64> {
        self.eval_checked(idx.level(), idx.dyadic_point())
    }

    /// All `H_{j,k}` at level `j`, in ascending `k`.
    pub fn level_values(&self, j: u32) -> Result<Vec<f64>> {
        let count = 1u64 << j;
        let scale = count as f64;
        (0..count)
            .map(|k| self.eval_checked(j, k as f64 / scale))
            .collect()
    }

    /// Closed-form `H(t)`; for `t = 1/2` the ramp limit takes the left value.
    pub fn limit_hurst(&self, t: f64) -> Result<f64> {
        match &self.limit {
            Some(f) => Ok(f(t)),
            None => Err(Error::NoLimit(self.name.clone())),
        }
    }

    /// Exact Lipschitz norm `sup|H_j| + Lip(H_j)` for built-in families.
    pub fn exact_lipschitz_norm(&self, j: u32) -> Option<f64> {
        self.exact_lipschitz.as_ref().map(|f| f(j))
    }
}

fn ramp_level(j: u32, t: f64) -> f64 {
    if j == 0 {
        return 0.5;
    }
    let jf = j as f64;
    let half_width = 1.0 / (2.0 * jf);
    if t <= 0.5 - half_width {
        0.25
    } else if t >= 0.5 + half_width {
        0.75
    } else {
        jf * t / 2.0 + (0.5 - jf / 4.0)
    }
}

/// Family selection as written on the command line or in a config file:
/// `constant:0.5`, `linear:0.2,0.45`, `sinusoidal`, `ramp`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Constant(f64),
    Linear(f64, f64),
    Sinusoidal,
    Ramp,
}

impl FamilySpec {
    pub fn build(&self) -> Result<HurstFamily> {
        match *self {
            FamilySpec::Constant(h) => HurstFamily::constant(h),
            FamilySpec::Linear(a, b) => HurstFamily::linear(a, b),
            FamilySpec::Sinusoidal => Ok(HurstFamily::sinusoidal()),
            FamilySpec::Ramp => Ok(HurstFamily::ramp()),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Constant(h) => write!(f, "constant:{h}"),
            FamilySpec::Linear(a, b) => write!(f, "linear:{a},{b}"),
            FamilySpec::Sinusoidal => f.write_str("sinusoidal"),
            FamilySpec::Ramp => f.write_str("ramp"),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::config("family", reason);
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let numbers = |args: Option<&str>| -> Result<Vec<f64>> {
            args.unwrap_or("")
                .split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("cannot parse parameter {a:?} in {s:?}")))
                })
                .collect()
        };
        match name {
            "constant" => match numbers(args)?.as_slice() {
                [] => Ok(FamilySpec::Constant(0.5)),
                [h] => Ok(FamilySpec::Constant(*h)),
                _ => Err(bad(format!("constant takes one parameter, got {s:?}"))),
            },
            "linear" => match numbers(args)?.as_slice() {
                [] => Ok(FamilySpec::Linear(0.2, 0.45)),
                [a, b] => Ok(FamilySpec::Linear(*a, *b)),
                _ => Err(bad(format!("linear takes two parameters, got {s:?}"))),
            },
            "sinusoidal" if args.is_none() => Ok(FamilySpec::Sinusoidal),
            "ramp" if args.is_none() => Ok(FamilySpec::Ramp),
            _ => Err(bad(format!(
                "unknown family {s:?} (expected constant[:h], linear[:a,b], sinusoidal, ramp)"
            ))),
        }
    }
}

/// Grid estimate of the norm `sup|H_j| + Lip(H_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub j: u32,
    pub nu_j: f64,
    pub grid_step: f64,
}

/// Lower estimate of the Lipschitz norm of `H_j` from a grid of step
/// `grid_step` (the last point is clamped to `t = 1`).
pub fn lipschitz_norm(family: &HurstFamily, j: u32, grid_step: f64) -> Result<LipschitzEstimate> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::config(
            "grid_step",
            format!("{grid_step} must lie in (0, 1]"),
        ));
    }
    let steps = (1.0 / grid_step).ceil() as usize;
    let mut sup = 0f64;
    let mut slope = 0f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=steps {
        let t = (i as f64 * grid_step).min(1.0);
        let h = family.eval(j, t);
        sup = sup.max(h.abs());
        if let Some((pt, ph)) = prev {
            if t > pt {
                slope = slope.max((h - ph).abs() / (t - pt));
            }
        }
        prev = Some((t, h));
    }
    Ok(LipschitzEstimate {
        j,
        nu_j: sup + slope,
        grid_step,
    })
}

/// Checks `ν_j <= C (1 + j)` for all `j <= j_max`, estimating `ν_j` on a grid
/// of step `min(2^-j, 2^-12)`.
pub fn check_growth(family: &HurstFamily, c: f64, j_max: u32) -> Result<bool> {
    if c <= 0.0 {
        return Err(Error::config("C", format!("{c} must be positive")));
    }
    for j in 0..=j_max {
        let step = 2f64.powi(-(j.max(12) as i32));
        let est = lipschitz_norm(family, j, step)?;
        if est.nu_j > c * (1.0 + j as f64) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest excess of `H(t)` over `h_lo + 1/2` on a 1025-point grid, if any.
///
/// Families violating this still simulate; callers report it as a warning.
pub fn limit_regularity_excess(family: &HurstFamily) -> Option<f64> {
    let threshold = family.h_lo() + 0.5;
    let worst = (0..=1024)
        .filter_map(|i| family.limit_hurst(i as f64 / 1024.0).ok())
        .fold(f64::NEG_INFINITY, f64::max);
    (worst >= threshold).then_some(worst - threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(j: u32, k: u64) -> HaarIndex {
        HaarIndex::new(j, k).unwrap()
    }

    #[test]
    fn h_jk_examples() {
        let c = HurstFamily::constant(0.5).unwrap();
        assert_eq!(c.h_jk(idx(7, 33)).unwrap(), 0.5);
        let lin = HurstFamily::linear(0.2, 0.45).unwrap();
        assert!((lin.h_jk(idx(1, 1)).unwrap() - 0.425).abs() < 1e-15);
        let ramp = HurstFamily::ramp();
        assert_eq!(ramp.eval(2, 0.5), 0.5);
    }

    #[test]
    fn misconfigured_custom_family_is_reported() {
        let fam = HurstFamily::custom("bad", 0.2, 0.6, |_, t| 0.2 + t).unwrap();
        assert!(fam.h_jk(idx(1, 0)).is_ok());
        assert!(matches!(
            fam.h_jk(idx(1, 1)),
            Err(Error::FamilyRange { .. })
        ));
        assert!(matches!(fam.limit_hurst(0.3), Err(Error::NoLimit(_))));
    }

    #[test]
    fn family_bounds_validated() {
        assert!(HurstFamily::constant(1.0).is_err());
        assert!(HurstFamily::linear(0.5, 0.6).is_err());
        assert!(HurstFamily::linear(0.9, -0.5).is_ok());
    }

    #[test]
    fn lipschitz_examples() {
        let c = HurstFamily::constant(0.5).unwrap();
        assert_eq!(lipschitz_norm(&c, 3, 1e-3).unwrap().nu_j, 0.5);
        let lin = HurstFamily::linear(0.2, 0.45).unwrap();
        let est = lipschitz_norm(&lin, 5, 1.0 / 64.0).unwrap();
        assert!((est.nu_j - 1.1).abs() < 1e-9);
        let ramp = HurstFamily::ramp();
        for j in 1..=10u32 {
            let est = lipschitz_norm(&ramp, j, 2f64.powi(-(j as i32) - 2)).unwrap();
            assert!((est.nu_j - (0.75 + j as f64 / 2.0)).abs() < 1e-9, "j={j}");
            assert!((est.nu_j - ramp.exact_lipschitz_norm(j).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn lipschitz_rejects_bad_step() {
        let c = HurstFamily::constant(0.5).unwrap();
        assert!(lipschitz_norm(&c, 0, 0.0).is_err());
    }

    #[test]
    fn growth_examples() {
        let c = HurstFamily::constant(0.5).unwrap();
        assert!(check_growth(&c, 1.0, 20).unwrap());
        let ramp = HurstFamily::ramp();
        assert!(check_growth(&ramp, 1.0, 20).unwrap());
        assert!(!check_growth(&ramp, 0.4, 20).unwrap());
        assert!(check_growth(&c, 0.0, 2).is_err());
    }

    #[test]
    fn limit_examples() {
        let ramp = HurstFamily::ramp();
        assert_eq!(ramp.limit_hurst(0.25).unwrap(), 0.25);
        assert_eq!(ramp.limit_hurst(0.75).unwrap(), 0.75);
        assert_eq!(ramp.limit_hurst(0.5).unwrap(), 0.25);
        let sin = HurstFamily::sinusoidal();
        assert!((sin.limit_hurst(0.25).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ramp_continuous_at_breakpoints() {
        for j in 1..=40u32 {
            let jf = j as f64;
            for b in [0.5 - 1.0 / (2.0 * jf), 0.5 + 1.0 / (2.0 * jf)] {
                let inner = jf * b / 2.0 + (0.5 - jf / 4.0);
                let outer = if b < 0.5 { 0.25 } else { 0.75 };
                assert!((inner - outer).abs() < 1e-12, "j={j} b={b}");
                assert!((ramp_level(j, b) - outer).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ramp_converges_off_the_jump() {
        let ramp = HurstFamily::ramp();
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            if t == 0.5 {
                continue;
            }
            let j_min = (1.0 / (2.0 * t - 1.0).abs()).floor() as u32 + 1;
            for j in j_min..j_min + 20 {
                assert_eq!(ramp.eval(j, t), ramp.limit_hurst(t).unwrap(), "t={t} j={j}");
            }
        }
    }

    #[test]
    fn level_invariant_limit_matches_level_zero() {
        for fam in [
            HurstFamily::constant(0.3).unwrap(),
            HurstFamily::linear(0.2, 0.45).unwrap(),
            HurstFamily::sinusoidal(),
        ] {
            assert!(fam.is_level_invariant());
            for i in 0..=100 {
                let t = i as f64 / 100.0;
                assert_eq!(fam.limit_hurst(t).unwrap(), fam.eval(0, t));
            }
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "constant:0.3".parse::<FamilySpec>().unwrap(),
            FamilySpec::Constant(0.3)
        );
        assert_eq!(
            "linear:0.2,0.45".parse::<FamilySpec>().unwrap(),
            FamilySpec::Linear(0.2, 0.45)
        );
        assert_eq!("ramp".parse::<FamilySpec>().unwrap(), FamilySpec::Ramp);
        assert_eq!(
            "sinusoidal".parse::<FamilySpec>().unwrap(),
            FamilySpec::Sinusoidal
        );
        assert!("wiggly".parse::<FamilySpec>().is_err());
        assert!("linear:0.2".parse::<FamilySpec>().is_err());
        let spec = FamilySpec::Linear(0.2, 0.45);
        assert_eq!(spec.to_string().parse::<FamilySpec>().unwrap(), spec);
    }

    #[test]
    fn regularity_excess_flagged() {
        assert!(limit_regularity_excess(&HurstFamily::constant(0.5).unwrap()).is_none());
        // 0.9 exceeds 0.1 + 0.5
        assert!(limit_regularity_excess(&HurstFamily::sinusoidal()).is_some());
    }
}
