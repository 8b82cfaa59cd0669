use ghbmp::hurst::HurstFamily;
use ghbmp::simulator::{evaluate_at, simulate_path, variance, PathPlan, SimConfig};

fn families() -> Vec<HurstFamily> {
    vec![
        HurstFamily::constant(0.3).unwrap(),
        HurstFamily::linear(0.2, 0.45).unwrap(),
        HurstFamily::sinusoidal(),
        HurstFamily::ramp(),
    ]
}

#[test]
fn grid_route_matches_direct_summation() {
    for fam in families() {
        for (levels, n) in [(5, 8), (8, 8), (11, 7), (12, 9)] {
            let cfg = SimConfig::new(levels, n, 17);
            let path = simulate_path(&fam, &cfg).unwrap();
            let direct = evaluate_at(&fam, levels, 17, &path.times).unwrap();
            for (i, (a, b)) in path.values.iter().zip(&direct).enumerate() {
                assert!(
                    (a - b).abs() < 1e-10,
                    "{} J={levels} n={n} i={i}: {a} vs {b}",
                    fam.name()
                );
            }
        }
    }
}

#[test]
fn plan_reuse_matches_fresh_simulation() {
    let fam = HurstFamily::ramp();
    let cfg = SimConfig::new(10, 8, 0);
    let plan = PathPlan::new(&fam, &cfg).unwrap();
    for seed in [3u64, 4, 5] {
        let fresh = simulate_path(&fam, &cfg.with_seed(seed)).unwrap();
        assert_eq!(plan.sample(seed).unwrap(), fresh);
    }
}

#[test]
fn tail_cutoff_reports_dropped_mass_and_stays_close() {
    let fam = HurstFamily::constant(0.5).unwrap();
    let exact = simulate_path(&fam, &SimConfig::new(10, 8, 5)).unwrap();
    assert!(exact.dropped_mass.is_none());
    let cut = simulate_path(&fam, &SimConfig::new(10, 8, 5).with_tail_tol(0.5)).unwrap();
    let bound = cut.dropped_mass.unwrap();
    assert!(bound > 0.0);
    let worst = exact
        .values
        .iter()
        .zip(&cut.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // The realized error of a Gaussian remainder with standard deviation
    // below `bound` is far below 6 bound.
    assert!(worst < 6.0 * bound, "worst {worst} bound {bound}");
    assert!(worst > 0.0);
}

/// `var(t, 2J) - var(t, J) <= C 2^{-2 h_lo J}` with the constant of the
/// envelope argument: `C = c^2 S 2^{-2 h_lo} / (1 - 2^{-2 h_lo})`,
/// `S = sum_p (2 + |p|)^{2 h_hi - 3}`.
#[test]
fn variance_tail_is_summable() {
    let c = ghbmp::kernel::KERNEL_ENVELOPE_C;
    for fam in families() {
        let (lo, hi) = (fam.h_lo(), fam.h_hi());
        let s: f64 = (-100_000i64..=100_000)
            .map(|p| (2.0 + p.abs() as f64).powf(2.0 * hi - 3.0))
            .sum();
        let q = 2f64.powf(-2.0 * lo);
        let constant = c * c * s * q / (1.0 - q);
        for t in [0.123, 0.77] {
            for levels in [8u32, 10, 12] {
                let tail =
                    variance(&fam, t, 2 * levels).unwrap() - variance(&fam, t, levels).unwrap();
                let bound = constant * 2f64.powf(-2.0 * lo * levels as f64);
                assert!(tail >= 0.0, "{} t={t} J={levels}: tail {tail}", fam.name());
                assert!(
                    tail <= bound,
                    "{} t={t} J={levels}: {tail} > {bound}",
                    fam.name()
                );
            }
        }
    }
}

#[test]
fn variance_partial_sums_increase() {
    let fam = HurstFamily::constant(0.5).unwrap();
    let sums: Vec<f64> = (8..=20).map(|j| variance(&fam, 0.5, j).unwrap()).collect();
    assert!(sums.windows(2).all(|w| w[1] >= w[0]));
    // Cauchy: successive level contributions shrink towards zero.
    assert!(sums[12] - sums[11] < 1e-3 * sums[12]);
}
