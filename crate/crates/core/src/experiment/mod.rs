//! End-to-end simulation studies: single cases and the replicated
//! difference table across truncation levels and grid sizes.

pub mod output;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate_hurst, partition, EstimateSeries, EstimatorConfig, SeriesSource};
use crate::hurst::{limit_regularity_excess, FamilySpec, HurstFamily};
use crate::simulator::{PathPlan, PathSample, SimConfig};

use output::{
    meta_path, write_boxplot_csv, write_estimate_csv, write_path_csv, write_path_meta,
    write_stats_csv,
};
use svg::{LinePlot, Series};

/// Desk-scale `(J, n)` pairs for the difference table.
pub const DESK_PAIRS: [(u32, u32); 3] = [(12, 9), (13, 10), (14, 10)];
/// The full `(J, n)` sweep, from `(14, 10)` to `(19, 15)`.
pub const FULL_PAIRS: [(u32, u32); 6] =
    [(14, 10), (15, 11), (16, 12), (17, 13), (18, 14), (19, 15)];

/// Average, maximum and mean-squared absolute difference between a true and
/// an estimated Hurst curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    pub levels: u32,
    pub grid_exponent: u32,
    pub avg_abs: f64,
    pub max_abs: f64,
    pub mse: f64,
}

pub fn diff_stats(
    h_true: &[f64],
    h_est: &[f64],
    levels: u32,
    grid_exponent: u32,
) -> Result<DiffStats> {
    if h_true.len() != h_est.len() {
        return Err(Error::LengthMismatch {
            left: h_true.len(),
            right: h_est.len(),
        });
    }
    if h_true.is_empty() {
        return Err(Error::config(
            "P",
            "difference statistics need at least one interval",
        ));
    }
    let count = h_true.len() as f64;
    let (mut sum, mut max, mut sq) = (0.0, 0.0f64, 0.0);
    for (t, e) in h_true.iter().zip(h_est) {
        let d = (t - e).abs();
        sum += d;
        max = max.max(d);
        sq += d * d;
    }
    Ok(DiffStats {
        levels,
        grid_exponent,
        avg_abs: sum / count,
        max_abs: max,
        mse: sq / count,
    })
}

/// `(min, q1, median, q3, max)` with linear interpolation between order
/// statistics.
pub fn five_number_summary(values: &[f64]) -> [f64; 5] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    [
        sorted[0],
        quantile(0.25),
        quantile(0.5),
        quantile(0.75),
        sorted[sorted.len() - 1],
    ]
}

/// Boxplot data for one replication, or for the averaged curve when
/// `replication` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotRow {
    pub levels: u32,
    pub grid_exponent: u32,
    pub replication: Option<usize>,
    pub seed: Option<u64>,
    pub summary: [f64; 5],
}

/// Settings for a single simulate-and-estimate case.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub sim: SimConfig,
    pub estimator: EstimatorConfig,
    pub replications: usize,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.estimator.validate()?;
        if self.replications == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        self.family.build()?;
        Ok(())
    }
}

/// One replication of a case.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    pub path: PathSample,
    pub estimate: EstimateSeries,
    pub h_true: Option<Vec<f64>>,
    pub stats: Option<DiffStats>,
}

impl Replication {
    pub fn seed(&self) -> u64 {
        self.path.config.seed
    }
}

impl fmt::Display for Replication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        write!(
            f,
            "replication {} seed {}: mean h_raw {:.4}, mean h_smooth {:.4}",
            self.index,
            self.seed(),
            mean(&self.estimate.h_raw),
            mean(&self.estimate.h_smooth)
        )?;
        if let Some(s) = &self.stats {
            write!(
                f,
                ", avg |diff| {:.4}, max |diff| {:.4}, mse {:.4}",
                s.avg_abs, s.max_abs, s.mse
            )?;
        }
        Ok(())
    }
}

/// Outcome of [`run_case`].
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub replications: Vec<Replication>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Creates `dir` and its parents; errors name the directory.
pub fn create_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create output directory {}: {e}", dir.display()),
        ))
    })
}

/// Runs `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Estimates the Hurst curve of a simulated path, reading the grid when it
/// holds both resolutions and evaluating the series directly otherwise.
pub fn estimate_path(
    family: &HurstFamily,
    path: &PathSample,
    config: &EstimatorConfig,
) -> Result<EstimateSeries> {
    let intervals = partition(config.intervals);
    let grid = 1usize << path.config.grid_exponent;
    let fine = config.resolution * config.dilation;
    if grid.is_multiple_of(fine) {
        estimate_hurst(path, config, &intervals)
    } else {
        let source = SeriesSource {
            family,
            levels: path.config.levels,
            seed: path.config.seed,
        };
        estimate_hurst(&source, config, &intervals)
    }
}

/// `H(t)` at the interval midpoints, when the family has a closed-form limit.
pub fn true_curve(family: &HurstFamily, mids: &[f64]) -> Option<Vec<f64>> {
    family.has_limit().then(|| {
        mids.iter()
            .map(|&t| family.limit_hurst(t).expect("limit present"))
            .collect()
    })
}

fn simulate_replication(
    family: &HurstFamily,
    plan: &PathPlan,
    estimator: &EstimatorConfig,
    index: usize,
    seed: u64,
) -> Result<Replication> {
    let path = plan.sample(seed)?;
    let estimate = estimate_path(family, &path, estimator)?;
    let h_true = true_curve(family, &estimate.interval_mids);
    let stats = h_true
        .as_ref()
        .map(|t| {
            diff_stats(
                t,
                &estimate.h_smooth,
                path.config.levels,
                path.config.grid_exponent,
            )
        })
        .transpose()?;
    Ok(Replication {
        index,
        path,
        estimate,
        h_true,
        stats,
    })
}

/// Seed of replication `r`.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

/// Simulates `R` paths, estimates and smooths each Hurst curve, and writes
/// path, metadata, estimate and (optionally) SVG files.
///
/// With one replication the files are `path.csv`, `path.meta` and
/// `estimate.csv`; otherwise each name carries a `_rNNN` suffix.
pub fn run_case(config: &ExperimentConfig) -> Result<CaseReport> {
    config.validate()?;
    let family = config.family.build()?;
    let plan = PathPlan::new(&family, &config.sim)?;
    let mut warnings = Vec::new();
    if let Some(excess) = limit_regularity_excess(&family) {
        warnings.push(format!(
            "H(t) is not below h_lo + 1/2 (excess {excess:.3}); the regularity theory does not cover this family, simulation proceeds"
        ));
    }
    create_output_dir(&config.output_dir)?;

    let replications = with_workers(config.workers, || {
        (0..config.replications)
            .into_par_iter()
            .map(|r| {
                simulate_replication(
                    &family,
                    &plan,
                    &config.estimator,
                    r,
                    replication_seed(config.sim.seed, r),
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut files = Vec::new();
    for rep in &replications {
        let suffix = if config.replications == 1 {
            String::new()
        } else {
            format!("_r{:03}", rep.index)
        };
        let dir = &config.output_dir;
        let path_csv = dir.join(format!("path{suffix}.csv"));
        write_path_csv(&path_csv, &rep.path)?;
        let meta = meta_path(&path_csv);
        write_path_meta(&meta, &rep.path, Some(&config.family))?;
        let est_csv = dir.join(format!("estimate{suffix}.csv"));
        write_estimate_csv(&est_csv, &rep.estimate, rep.h_true.as_deref())?;
        files.extend([path_csv, meta, est_csv]);
        if config.emit_svg {
            let path_svg = dir.join(format!("path{suffix}.svg"));
            write_svg(&path_svg, &path_plot(&rep.path))?;
            let hurst_svg = dir.join(format!("hurst{suffix}.svg"));
            write_svg(
                &hurst_svg,
                &hurst_plot(&rep.estimate, rep.h_true.as_deref(), &family),
            )?;
            files.extend([path_svg, hurst_svg]);
        }
    }
    for rep in &replications {
        if !rep.estimate.degenerate.is_empty() {
            warnings.push(format!(
                "replication {}: {} interval(s) had zero variation at both resolutions; estimate set to 0",
                rep.index,
                rep.estimate.degenerate.len()
            ));
        }
    }
    Ok(CaseReport {
        replications,
        files,
        warnings,
    })
}

fn write_svg(path: &Path, plot: &LinePlot) -> Result<()> {
    fs::write(path, plot.render())?;
    Ok(())
}

pub fn path_plot(path: &PathSample) -> LinePlot {
    LinePlot {
        title: format!(
            "{} path, J={}, n={}, seed={}",
            path.family_name, path.config.levels, path.config.grid_exponent, path.config.seed
        ),
        x_label: "t".into(),
        y_label: "X(t)".into(),
        y_range: None,
        series: vec![Series {
            label: "X_J(t)".into(),
            color: "black",
            points: path
                .times
                .iter()
                .copied()
                .zip(path.values.iter().copied())
                .collect(),
        }],
    }
}

pub fn hurst_plot(est: &EstimateSeries, h_true: Option<&[f64]>, family: &HurstFamily) -> LinePlot {
    let mids = &est.interval_mids;
    let zip = |ys: &[f64]| mids.iter().copied().zip(ys.iter().copied()).collect();
    let mut series = Vec::new();
    if let Some(t) = h_true {
        series.push(Series {
            label: "true H(t)".into(),
            color: "blue",
            points: zip(t),
        });
    }
    series.push(Series {
        label: "estimate".into(),
        color: "red",
        points: zip(&est.h_raw),
    });
    series.push(Series {
        label: "LOESS".into(),
        color: "green",
        points: zip(&est.h_smooth),
    });
    LinePlot {
        title: format!("Hurst function, {} family", family.name()),
        x_label: "t".into(),
        y_label: "H".into(),
        y_range: Some((0.0, 1.0)),
        series,
    }
}

/// Which per-replication curve enters the replication average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Raw,
    Smoothed,
}

/// Settings for the replicated difference table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub family: FamilySpec,
    pub pairs: Vec<(u32, u32)>,
    pub replications: usize,
    pub seed: u64,
    pub dilation: usize,
    pub order: usize,
    pub intervals: usize,
    pub span: f64,
    pub tail_tol: f64,
    pub curve: CurveKind,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub emit_svg: bool,
}

impl TableConfig {
    /// Sinusoidal family on the desk-scale pairs with `R = 10`.
    pub fn desk(seed: u64) -> Self {
        Self {
            family: FamilySpec::Sinusoidal,
            pairs: DESK_PAIRS.to_vec(),
            replications: 10,
            seed,
            dilation: 2,
            order: 2,
            intervals: 100,
            span: crate::loess::DEFAULT_SPAN,
            tail_tol: 0.0,
            curve: CurveKind::Raw,
            workers: 1,
            output_dir: None,
            emit_svg: false,
        }
    }

    /// Estimator settings for grid exponent `n`: `Q N` is the full grid when
    /// `Q` divides `2^n`.
    pub fn estimator_for(&self, grid_exponent: u32) -> EstimatorConfig {
        EstimatorConfig {
            resolution: (1usize << grid_exponent) / self.dilation,
            dilation: self.dilation,
            order: self.order,
            intervals: self.intervals,
            span: self.span,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::config("pairs", "no (J, n) pairs given"));
        }
        for &(levels, n) in &self.pairs {
            if n > levels {
                return Err(Error::config(
                    "n",
                    format!("grid exponent {n} exceeds the truncation level J = {levels}"),
                ));
            }
            let mut sim = SimConfig::new(levels, n, self.seed);
            sim.tail_tol = self.tail_tol;
            sim.validate()?;
            self.estimator_for(n).validate()?;
        }
        if self.replications == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        let family = self.family.build()?;
        if !family.has_limit() {
            return Err(Error::NoLimit(family.name().to_string()));
        }
        Ok(())
    }
}

/// Everything produced for one `(J, n)` pair.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub stats: DiffStats,
    pub interval_mids: Vec<f64>,
    pub h_true: Vec<f64>,
    pub averaged: Vec<f64>,
    /// Per-replication curves that entered the average.
    pub curves: Vec<Vec<f64>>,
    pub boxplots: Vec<BoxplotRow>,
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub files: Vec<PathBuf>,
}

/// For each `(J, n)`: runs `R` replications, averages the estimated curves,
/// and compares the average with the true curve. Per-replication boxplot
/// summaries of the absolute differences are reported alongside.
pub fn replicate_table(config: &TableConfig) -> Result<TableReport> {
    config.validate()?;
    let family = config.family.build()?;
    let mut rows = Vec::with_capacity(config.pairs.len());
    for &(levels, n) in &config.pairs {
        let mut sim = SimConfig::new(levels, n, config.seed);
        sim.tail_tol = config.tail_tol;
        let plan = PathPlan::new(&family, &sim)?;
        let estimator = config.estimator_for(n);
        let reps = with_workers(config.workers, || {
            (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    simulate_replication(
                        &family,
                        &plan,
                        &estimator,
                        r,
                        replication_seed(config.seed, r),
                    )
                })
                .collect::<Result<Vec<_>>>()
        })??;

        let interval_mids = reps[0].estimate.interval_mids.clone();
        let h_true = reps[0].h_true.clone().expect("validated: limit present");
        let curves: Vec<Vec<f64>> = reps
            .iter()
            .map(|r| match config.curve {
                CurveKind::Raw => r.estimate.h_raw.clone(),
                CurveKind::Smoothed => r.estimate.h_smooth.clone(),
            })
            .collect();
        let averaged: Vec<f64> = (0..interval_mids.len())
            .map(|p| curves.iter().map(|c| c[p]).sum::<f64>() / curves.len() as f64)
            .collect();
        let stats = diff_stats(&h_true, &averaged, levels, n)?;

        let abs_diffs = |curve: &[f64]| -> Vec<f64> {
            curve
                .iter()
                .zip(&h_true)
                .map(|(e, t)| (e - t).abs())
                .collect()
        };
        let mut boxplots: Vec<BoxplotRow> = reps
            .iter()
            .zip(&curves)
            .map(|(rep, curve)| BoxplotRow {
                levels,
                grid_exponent: n,
                replication: Some(rep.index),
                seed: Some(rep.seed()),
                summary: five_number_summary(&abs_diffs(curve)),
            })
            .collect();
        boxplots.push(BoxplotRow {
            levels,
            grid_exponent: n,
            replication: None,
            seed: None,
            summary: five_number_summary(&abs_diffs(&averaged)),
        });
        rows.push(TableRow {
            stats,
            interval_mids,
            h_true,
            averaged,
            curves,
            boxplots,
        });
    }

    let mut files = Vec::new();
    if let Some(dir) = &config.output_dir {
        create_output_dir(dir)?;
        let stats: Vec<DiffStats> = rows.iter().map(|r| r.stats).collect();
        let stats_csv = dir.join("table.csv");
        write_stats_csv(&stats_csv, &stats)?;
        let box_csv = dir.join("boxplot.csv");
        let boxes: Vec<BoxplotRow> = rows.iter().flat_map(|r| r.boxplots.clone()).collect();
        write_boxplot_csv(&box_csv, &boxes)?;
        files.extend([stats_csv, box_csv]);
        if config.emit_svg {
            let svg_path = dir.join("table.svg");
            write_svg(&svg_path, &table_plot(&stats))?;
            files.push(svg_path);
        }
    }
    Ok(TableReport { rows, files })
}

fn table_plot(stats: &[DiffStats]) -> LinePlot {
    let pick = |f: fn(&DiffStats) -> f64| stats.iter().map(|s| (s.levels as f64, f(s))).collect();
    LinePlot {
        title: "Differences between averaged estimates and H(t)".into(),
        x_label: "J".into(),
        y_label: "difference".into(),
        y_range: None,
        series: vec![
            Series {
                label: "average".into(),
                color: "blue",
                points: pick(|s| s.avg_abs),
            },
            Series {
                label: "maximum".into(),
                color: "red",
                points: pick(|s| s.max_abs),
            },
            Series {
                label: "mean squared".into(),
                color: "green",
                points: pick(|s| s.mse),
            },
        ],
    }
}
