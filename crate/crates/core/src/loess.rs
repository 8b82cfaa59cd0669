//! Local linear regression (LOESS) with tricube weights.

use crate::error::{Error, Result};

/// Conventional span used when none is configured.
pub const DEFAULT_SPAN: f64 = 0.25;

#[inline]
fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u * u;
        v * v * v
    }
}

/// Smooths `ys` by a degree-1 local fit at every `xs[i]`, using the
/// `ceil(span * P)` nearest neighbours weighted by the tricube of the
/// distance relative to the farthest of them.
///
/// Ties in distance are broken by index. When the weighted neighbours do not
/// determine a line (all at the same abscissa, or a single positive weight)
/// the weighted mean is returned instead.
pub fn loess_smooth(xs: &[f64], ys: &[f64], span: f64) -> Result<Vec<f64>> {
    let p = xs.len();
    if ys.len() != p {
        return Err(Error::LengthMismatch {
            left: p,
            right: ys.len(),
        });
    }
    if p < 3 {
        return Err(Error::config(
            "P",
            format!("LOESS needs at least 3 points, got {p}"),
        ));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::config("span", format!("{span} is not in (0, 1]")));
    }
    let q = (span * p as f64).ceil() as usize;
    if q < 2 {
        return Err(Error::config(
            "span",
            format!("span {span} covers fewer than 2 of {p} points"),
        ));
    }
    let q = q.min(p);

    let mut order: Vec<usize> = (0..p).collect();
    let mut fitted = Vec::with_capacity(p);
    for i in 0..p {
        let x0 = xs[i];
        order.sort_by(|&a, &b| {
            (xs[a] - x0)
                .abs()
                .total_cmp(&(xs[b] - x0).abs())
                .then(a.cmp(&b))
        });
        let neighbours = &order[..q];
        let dmax = (xs[neighbours[q - 1]] - x0).abs();

        let weights: Vec<f64> = neighbours
            .iter()
            .map(|&j| {
                if dmax > 0.0 {
                    tricube((xs[j] - x0).abs() / dmax)
                } else {
                    1.0
                }
            })
            .collect();
        let sw: f64 = weights.iter().sum();
        let (mut mx, mut my) = (0.0, 0.0);
        for (&j, &w) in neighbours.iter().zip(&weights) {
            mx += w * xs[j];
            my += w * ys[j];
        }
        mx /= sw;
        my /= sw;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (&j, &w) in neighbours.iter().zip(&weights) {
            let dx = xs[j] - mx;
            sxx += w * dx * dx;
            sxy += w * dx * (ys[j] - my);
        }
        if sxx <= 1e-14 * sw * dmax * dmax {
            fitted.push(my);
        } else {
            fitted.push(my + sxy / sxx * (x0 - mx));
        }
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;
    use std::f64::consts::PI;

    fn grid(p: usize) -> Vec<f64> {
        (0..p).map(|i| (i as f64 + 0.5) / p as f64).collect()
    }

    #[test]
    fn reproduces_constants() {
        let xs = grid(40);
        let out = loess_smooth(&xs, &vec![0.37; 40], 0.25).unwrap();
        assert!(out.iter().all(|v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn reproduces_lines() {
        let xs = grid(100);
        let ys: Vec<f64> = xs.iter().map(|x| 0.2 + 0.45 * x).collect();
        let out = loess_smooth(&xs, &ys, 0.25).unwrap();
        for (o, y) in out.iter().zip(&ys) {
            assert!((o - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn reduces_noise_on_a_sine() {
        let xs = grid(100);
        let truth: Vec<f64> = xs.iter().map(|x| (2.0 * PI * x).sin()).collect();
        let noise = NoiseStream::new(2024).level(0, 100);
        let ys: Vec<f64> = truth.iter().zip(&noise).map(|(t, e)| t + 0.1 * e).collect();
        let out = loess_smooth(&xs, &ys, 0.25).unwrap();
        let rms = |a: &[f64]| {
            (a.iter()
                .zip(&truth)
                .map(|(v, t)| (v - t).powi(2))
                .sum::<f64>()
                / a.len() as f64)
                .sqrt()
        };
        assert!(rms(&out) < rms(&ys), "{} vs {}", rms(&out), rms(&ys));
    }

    #[test]
    fn degenerate_design_falls_back_to_mean() {
        let xs = vec![0.5; 5];
        let ys = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let out = loess_smooth(&xs, &ys, 0.6).unwrap();
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        let xs = grid(10);
        assert!(loess_smooth(&xs, &xs[..9], 0.5).is_err());
        assert!(loess_smooth(&xs[..2], &xs[..2], 1.0).is_err());
        assert!(loess_smooth(&xs, &xs, 0.0).is_err());
        assert!(loess_smooth(&xs, &xs, 0.1).is_err());
    }
}
