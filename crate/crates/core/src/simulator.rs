//! Truncated-series synthesis of Gaussian Haar-based multifractional paths.
//!
//! ```text
//! X_J(t) = Σ_{j=0}^{J} Σ_{k=0}^{2^j-1} 2^{-j H_{j,k}} h^[H_{j,k}](2^j t - k) ε_{j,k}
//! ```
//!
//! Two evaluation routes are provided. [`evaluate_at`] sums the series
//! term by term at arbitrary times with the closed-form kernel. [`PathPlan`]
//! targets the dyadic grid `t_i = i / 2^n`: on that grid every kernel
//! argument at level `j` lies on a fixed lattice, so Haar coefficients that
//! share the same Hurst value are applied as one FFT convolution against a
//! tabulated kernel and the remaining coefficients are summed directly with
//! logarithm tables.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hurst::HurstFamily;
use crate::kernel::{kernel, HaarIndex, KERNEL_ENVELOPE_C};
use crate::noise::NoiseStream;

/// Default cap on the number of kernel terms a single grid path may need.
pub const DEFAULT_COST_CAP: u128 = 1 << 40;

/// Coefficients sharing a Hurst value are convolved once this many share it.
const SHARED_GROUP_MIN: usize = 32;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Element-wise compensated accumulation into a vector of sums.
#[derive(Debug, Clone)]
struct CompensatedVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedVec {
    fn zeros(len: usize) -> Self {
        Self {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    #[inline(always)]
    fn add(&mut self, i: usize, v: f64) {
        let s = self.sum[i];
        let t = s + v;
        let c = if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        self.comp[i] += c;
        self.sum[i] = t;
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c)
    }
}

/// Simulation parameters: truncation level `J`, grid exponent `n`, seed and
/// optional far-field cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Truncation level `J`.
    pub levels: u32,
    /// Grid exponent `n`; the grid is `i / 2^n`, `i = 0..=2^n`.
    pub grid_exponent: u32,
    pub seed: u64,
    /// `0` sums every contributing coefficient; a positive value drops
    /// coefficients whose decay envelope falls below it.
    pub tail_tol: f64,
    pub cost_cap: u128,
}

impl SimConfig {
    pub const MAX_LEVELS: u32 = 30;
    pub const MAX_GRID_EXPONENT: u32 = 26;

    pub fn new(levels: u32, grid_exponent: u32, seed: u64) -> Self {
        Self {
            levels,
            grid_exponent,
            seed,
            tail_tol: 0.0,
            cost_cap: DEFAULT_COST_CAP,
        }
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels > Self::MAX_LEVELS {
            return Err(Error::config(
                "J",
                format!(
                    "{} exceeds the supported maximum {}",
                    self.levels,
                    Self::MAX_LEVELS
                ),
            ));
        }
        if self.grid_exponent == 0 || self.grid_exponent > Self::MAX_GRID_EXPONENT {
            return Err(Error::config(
                "n",
                format!(
                    "{} must lie in 1..={}",
                    self.grid_exponent,
                    Self::MAX_GRID_EXPONENT
                ),
            ));
        }
        if !(self.tail_tol >= 0.0 && self.tail_tol.is_finite()) {
            return Err(Error::config(
                "tail_tol",
                format!("{} must be a finite non-negative number", self.tail_tol),
            ));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        (1usize << self.grid_exponent) + 1
    }

    /// Upper bound on the number of kernel terms needed for one grid path.
    pub fn cost(&self) -> u128 {
        let points = self.grid_points() as u128;
        points * ((1u128 << (self.levels + 1)) - 1) / 2
    }
}

/// Process values on the dyadic grid, with the configuration that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub config: SimConfig,
    pub family_name: String,
    pub family_params: String,
    /// Worst-case standard deviation of the dropped far-field terms, when a
    /// tail cutoff was requested.
    pub dropped_mass: Option<f64>,
}

impl PathSample {
    /// Index of `numer / denom` on the grid, if it is a grid point.
    pub fn grid_index(&self, numer: u64, denom: u64) -> Result<usize> {
        let points = 1u64 << self.config.grid_exponent;
        let off_grid = |reason: &str| Error::OffGrid {
            numer,
            denom,
            reason: reason.to_string(),
        };
        if denom == 0 || numer > denom {
            return Err(off_grid("outside [0, 1]"));
        }
        if !points.is_multiple_of(denom) {
            return Err(off_grid(&format!(
                "resolution {denom} does not divide the grid size {points}"
            )));
        }
        Ok((numer * (points / denom)) as usize)
    }
}

/// `∫_0^1 (t - s)_+^{H_{j,k} - 1/2} h_{j,k}(s) ds = 2^{-j H_{j,k}} h^[H_{j,k}](2^j t - k)`.
pub fn coefficient(family: &HurstFamily, idx: HaarIndex, t: f64) -> Result<f64> {
    let x = (1u64 << idx.level()) as f64 * t - idx.position() as f64;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let h = family.h_jk(idx)?;
    Ok(level_scale(idx.level(), h) * kernel(h, x))
}

#[inline]
fn level_scale(j: u32, h: f64) -> f64 {
    (-(j as f64) * h).exp2()
}

/// Number of `k` at level `j` with `2^j t - k > 0`.
fn contributing(j: u32, t: f64) -> u64 {
    let scaled = (1u64 << j) as f64 * t;
    if scaled <= 0.0 {
        0
    } else {
        (scaled.ceil() as u64).min(1u64 << j)
    }
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::config(name, format!("{t} is outside [0, 1]")))
    }
}

/// `E X_J(t)^2`: the sum of squared series coefficients up to level `J`.
pub fn variance(family: &HurstFamily, t: f64, levels: u32) -> Result<f64> {
    covariance(family, t, t, levels)
}

/// `Cov(X_J(t), X_J(t2))`.
pub fn covariance(family: &HurstFamily, t: f64, t2: f64, levels: u32) -> Result<f64> {
    check_time("t", t)?;
    check_time("t2", t2)?;
    let mut total = CompensatedSum::default();
    for j in 0..=levels {
        let scale = (1u64 << j) as f64;
        let mut level = CompensatedSum::default();
        let count = contributing(j, t.min(t2));
        for k in 0..count {
            let h = family.eval_checked(j, k as f64 / scale)?;
            let x1 = scale * t - k as f64;
            let x2 = scale * t2 - k as f64;
            let s = level_scale(j, h);
            level.add(s * s * kernel(h, x1) * kernel(h, x2));
        }
        total.add(level.value());
    }
    Ok(total.value())
}

/// `X_J(t)` at arbitrary times by direct term-by-term summation.
pub fn evaluate_at(
    family: &HurstFamily,
    levels: u32,
    seed: u64,
    times: &[f64],
) -> Result<Vec<f64>> {
    for &t in times {
        check_time("t", t)?;
    }
    let noise = NoiseStream::new(seed);
    let mut acc = vec![CompensatedSum::default(); times.len()];
    let max_t = times.iter().copied().fold(0.0, f64::max);
    for j in 0..=levels {
        let needed = contributing(j, max_t);
        if needed == 0 {
            continue;
        }
        let eps = noise.level(j, needed);
        let scale = (1u64 << j) as f64;
        let hs: Vec<f64> = (0..needed)
            .map(|k| family.eval_checked(j, k as f64 / scale))
            .collect::<Result<_>>()?;
        for (slot, &t) in acc.iter_mut().zip(times) {
            let mut level = CompensatedSum::default();
            for k in 0..contributing(j, t) as usize {
                let h = hs[k];
                level.add(level_scale(j, h) * kernel(h, scale * t - k as f64) * eps[k]);
            }
            slot.add(level.value());
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// Synthesizes one path on the grid of `config`.
pub fn simulate_path(family: &HurstFamily, config: &SimConfig) -> Result<PathSample> {
    PathPlan::new(family, config)?.sample(config.seed)
}

/// Second-order dyadic increment `X((K+1)/2^J) - 2 X((2K+1)/2^{J+1}) + X(K/2^J)`.
pub fn second_difference(path: &PathSample, level: u32, position: u64) -> Result<f64> {
    let n = path.config.grid_exponent;
    if level + 1 > n {
        return Err(Error::OffGrid {
            numer: 2 * position + 1,
            denom: 1u64 << (level + 1).min(63),
            reason: format!(
                "level {level} needs a grid exponent of at least {}",
                level + 1
            ),
        });
    }
    if position >= 1u64 << level {
        return Err(Error::InvalidIndex {
            j: level,
            k: position,
        });
    }
    let coarse = 1u64 << level;
    let fine = coarse << 1;
    let left = path.values[path.grid_index(position, coarse)?];
    let mid = path.values[path.grid_index(2 * position + 1, fine)?];
    let right = path.values[path.grid_index(position + 1, coarse)?];
    Ok(right - 2.0 * mid + left)
}

/// Coefficients of one level sharing a Hurst value, applied by convolution.
struct SharedGroup {
    members: Vec<u64>,
    /// Forward FFT of the kernel tabulated on the level lattice.
    spectrum: Vec<Complex<f64>>,
}

/// Precomputed data for one level `j` on a grid of exponent `n`.
///
/// At level `j` the kernel argument of grid point `i` and coefficient `k` is
/// `(i * out_stride - k * coef_stride) * step`, where `step = min(1, 2^{j-n})`.
struct LevelPlan {
    j: u32,
    step: f64,
    coef_stride: usize,
    out_stride: usize,
    hurst: Vec<f64>,
    /// `2^{-j H_{j,k}} / (H_{j,k} + 1/2)`
    amplitude: Vec<f64>,
    groups: Vec<SharedGroup>,
    direct: Vec<u64>,
    /// `ln(u * step / 2)` for `u = 0..=2 * lattice` (entry 0 unused).
    half_lattice_ln: Vec<f64>,
}

/// Forward and inverse transforms of one size.
type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Reusable synthesis plan for a family on a fixed grid; one plan serves
/// any number of seeds.
pub struct PathPlan {
    family_name: String,
    family_params: String,
    config: SimConfig,
    h_lo: f64,
    h_hi: f64,
    levels: Vec<LevelPlan>,
    fft: BTreeMap<usize, FftPair>,
}

impl PathPlan {
    pub fn new(family: &HurstFamily, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let cost = config.cost();
        if cost > config.cost_cap {
            return Err(Error::Budget {
                cost,
                cap: config.cost_cap,
            });
        }
        let n = config.grid_exponent;
        let mut planner = FftPlanner::<f64>::new();
        let mut fft = BTreeMap::new();
        let mut levels = Vec::with_capacity(config.levels as usize + 1);
        for j in 0..=config.levels {
            let hurst = family.level_values(j)?;
            let amplitude = hurst
                .iter()
                .map(|&h| level_scale(j, h) / (h + 0.5))
                .collect();
            let (step, coef_stride, out_stride) = if j < n {
                (2f64.powi(j as i32 - n as i32), 1usize << (n - j), 1usize)
            } else {
                (1.0, 1usize, 1usize << (j - n))
            };
            let lattice = 1usize << j.max(n);

            let mut by_value: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for (k, h) in hurst.iter().enumerate() {
                by_value.entry(h.to_bits()).or_default().push(k as u64);
            }
            let mut groups = Vec::new();
            let mut direct = Vec::new();
            let fft_len = 2 * lattice;
            for (bits, members) in by_value {
                if config.tail_tol == 0.0 && members.len() >= SHARED_GROUP_MIN {
                    let h = f64::from_bits(bits);
                    let (forward, _) = fft.entry(fft_len).or_insert_with(|| {
                        (
                            planner.plan_fft_forward(fft_len),
                            planner.plan_fft_inverse(fft_len),
                        )
                    });
                    let mut spectrum: Vec<Complex<f64>> = (0..fft_len)
                        .map(|m| {
                            let v = if m <= lattice {
                                // Kernel without the 1/(h + 1/2) factor, which
                                // lives in the amplitude.
                                kernel(h, m as f64 * step) * (h + 0.5)
                            } else {
                                0.0
                            };
                            Complex::new(v, 0.0)
                        })
                        .collect();
                    forward.process(&mut spectrum);
                    groups.push(SharedGroup { members, spectrum });
                } else {
                    direct.extend(members);
                }
            }
            direct.sort_unstable();
            groups.sort_by_key(|g| g.members[0]);

            let half_lattice_ln = (0..=2 * lattice)
                .map(|u| {
                    if u == 0 {
                        f64::NEG_INFINITY
                    } else {
                        (u as f64 * step / 2.0).ln()
                    }
                })
                .collect();

            levels.push(LevelPlan {
                j,
                step,
                coef_stride,
                out_stride,
                hurst,
                amplitude,
                groups,
                direct,
                half_lattice_ln,
            });
        }
        Ok(Self {
            family_name: family.name().to_string(),
            family_params: family.params().to_string(),
            config: *config,
            h_lo: family.h_lo(),
            h_hi: family.h_hi(),
            levels,
            fft,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Far-field cutoff on the kernel argument implied by `tail_tol`: past it
    /// the envelope `c (3 + x)^{h_hi - 3/2}` is below the tolerance.
    fn tail_cutoff(&self) -> Option<f64> {
        (self.config.tail_tol > 0.0)
            .then(|| (KERNEL_ENVELOPE_C / self.config.tail_tol).powf(1.0 / (1.5 - self.h_hi)) - 3.0)
    }

    /// Synthesizes the path for `seed`.
    pub fn sample(&self, seed: u64) -> Result<PathSample> {
        let n = self.config.grid_exponent;
        let points = 1usize << n;
        let noise = NoiseStream::new(seed);
        let cutoff = self.tail_cutoff();
        let mut total = CompensatedVec::zeros(points + 1);
        let mut dropped = vec![0.0f64; points + 1];

        for level in &self.levels {
            let eps = noise.level(level.j, 1u64 << level.j);
            let mut acc = CompensatedVec::zeros(points + 1);
            for group in &level.groups {
                self.apply_group(level, group, &eps, &mut acc);
            }
            match cutoff {
                None => self.apply_direct(level, &eps, &mut acc, f64::INFINITY),
                Some(cut) => {
                    self.apply_direct(level, &eps, &mut acc, cut);
                    self.accumulate_dropped(level, cut, &mut dropped);
                }
            }
            for (i, v) in acc.values().enumerate() {
                total.add(i, v);
            }
        }

        let mut values: Vec<f64> = total.values().collect();
        values[0] = 0.0;
        let times = (0..=points).map(|i| i as f64 / points as f64).collect();
        let dropped_mass = cutoff.map(|_| dropped.iter().copied().fold(0.0, f64::max).sqrt());
        Ok(PathSample {
            times,
            values,
            config: SimConfig {
                seed,
                ..self.config
            },
            family_name: self.family_name.clone(),
            family_params: self.family_params.clone(),
            dropped_mass,
        })
    }

    fn apply_group(
        &self,
        level: &LevelPlan,
        group: &SharedGroup,
        eps: &[f64],
        acc: &mut CompensatedVec,
    ) {
        let fft_len = group.spectrum.len();
        let (forward, inverse) = &self.fft[&fft_len];
        let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
        for &k in &group.members {
            let k = k as usize;
            buf[k * level.coef_stride] = Complex::new(level.amplitude[k] * eps[k], 0.0);
        }
        forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&group.spectrum) {
            *b *= s;
        }
        inverse.process(&mut buf);
        let norm = 1.0 / fft_len as f64;
        let points = acc.sum.len() - 1;
        // No coefficient reaches t = 0, so index 0 is skipped.
        for i in 1..=points {
            acc.add(i, buf[i * level.out_stride].re * norm);
        }
    }

    fn apply_direct(&self, level: &LevelPlan, eps: &[f64], acc: &mut CompensatedVec, cut: f64) {
        let points = acc.sum.len() - 1;
        let lnt = &level.half_lattice_ln;
        // Lattice offsets of x - 1/2 and x - 1, in half-lattice units.
        let half_shift = (1.0 / level.step) as usize;
        let mut powers: Vec<f64> = Vec::new();
        for &k in &level.direct {
            let k = k as usize;
            let beta = level.hurst[k] + 0.5;
            let weight = level.amplitude[k] * eps[k];
            let base = k * level.coef_stride;
            let first = base / level.out_stride + 1;
            let last = if cut.is_finite() {
                let max_m = (cut / level.step).floor();
                if max_m < 1.0 {
                    continue;
                }
                (((base as f64 + max_m) / level.out_stride as f64).floor() as usize).min(points)
            } else {
                points
            };
            if first > last {
                continue;
            }
            if level.step < 1.0 {
                // Fine lattice: x, x - 1/2 and x - 1 are all lattice points,
                // so one power per lattice point suffices.
                let span = last - base;
                powers.clear();
                powers.extend((0..=span).map(|m| {
                    if m == 0 {
                        0.0
                    } else {
                        (beta * lnt[2 * m]).exp()
                    }
                }));
                let half = half_shift / 2;
                let whole = half_shift;
                for i in first..=last {
                    let m = i - base;
                    let mut kv = powers[m];
                    if m > half {
                        kv -= 2.0 * powers[m - half];
                    }
                    if m > whole {
                        kv += powers[m - whole];
                    }
                    acc.add(i, weight * kv);
                }
            } else {
                let pow = |u: usize| -> f64 {
                    if u == 0 {
                        0.0
                    } else {
                        (beta * lnt[u]).exp()
                    }
                };
                for i in first..=last {
                    let m = i * level.out_stride - base;
                    let u = 2 * m;
                    let kv = pow(u) - 2.0 * pow(u - 1) + pow(u - 2);
                    acc.add(i, weight * kv);
                }
            }
        }
    }

    /// Adds, per grid point, a bound on the variance of the terms beyond the
    /// cutoff: `Σ 2^{-2 j h_lo} c^2 (3 + x)^{2 h_hi - 3}` over the dropped `x`.
    fn accumulate_dropped(&self, level: &LevelPlan, cut: f64, dropped: &mut [f64]) {
        let points = dropped.len() - 1;
        let a = 2.0 * self.h_hi - 3.0;
        let prefactor = (-2.0 * level.j as f64 * self.h_lo).exp2() * KERNEL_ENVELOPE_C.powi(2);
        let scale = (1u64 << level.j) as f64;
        for (i, slot) in dropped.iter_mut().enumerate() {
            let x_max = scale * i as f64 / points as f64;
            if x_max <= cut {
                continue;
            }
            // Dropped arguments are x_max - k > cut for integer k >= 0.
            let x0 = x_max - ((x_max - cut).ceil() - 1.0);
            let x0 = if x0 <= cut { x0 + 1.0 } else { x0 };
            let head = (3.0 + x0).powf(a);
            let tail = (3.0 + x0).powf(a + 1.0) / (-a - 1.0);
            *slot += prefactor * (head + tail);
        }
    }
}
