//! `ghbmp`: simulate Haar-based multifractional paths, estimate their Hurst
//! functions, and reproduce the replicated difference table.

mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ghbmp::estimator::{estimate_hurst, partition, SeriesSource};
use ghbmp::experiment::output::{
    meta_path, read_path_csv, read_path_meta, write_estimate_csv, write_path_csv, write_path_meta,
};
use ghbmp::experiment::{
    create_output_dir, hurst_plot, path_plot, replicate_table, run_case, true_curve,
    ExperimentConfig,
};
use ghbmp::hurst::limit_regularity_excess;
use ghbmp::{simulate_path, Error, PathSample, Result};

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "ghbmp",
    version,
    about = "Haar-based multifractional process toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path on the dyadic grid and write it as CSV.
    Simulate(Opts),
    /// Estimate the Hurst function of a path CSV.
    Estimate {
        /// Path CSV written by `simulate` (its `.meta` sidecar is read too).
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Simulate, estimate and smooth one case, optionally replicated.
    Case(Opts),
    /// Replicated difference statistics across (J, n).
    Table(Opts),
    /// Check the closed-form kernel and coefficients against quadrature.
    Selftest(Opts),
}

/// Flags shared by every command. Each mirrors a config-file key and
/// overrides it.
#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    /// Hurst family: constant[:h], linear[:a,b], sinusoidal, ramp.
    #[arg(long)]
    family: Option<String>,
    /// Truncation level J.
    #[arg(long = "J")]
    levels: Option<u32>,
    /// Grid exponent n (2^n + 1 points).
    #[arg(long = "n")]
    grid_exponent: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Coarse resolution N.
    #[arg(long = "N")]
    resolution: Option<usize>,
    /// Dilation Q.
    #[arg(long = "Q")]
    dilation: Option<usize>,
    /// Filter order L.
    #[arg(long = "L")]
    order: Option<usize>,
    /// Number of subintervals P.
    #[arg(long = "P")]
    intervals: Option<usize>,
    /// LOESS span.
    #[arg(long)]
    span: Option<f64>,
    /// Replications R.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Drop far-field coefficients below this kernel envelope (0 keeps all).
    #[arg(long = "tail-tol")]
    tail_tol: Option<f64>,
    /// Worker threads for replications.
    #[arg(long)]
    workers: Option<usize>,
    /// Config file with [simulator], [estimator] and [experiment] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Full (14,10)..(19,15) sweep with 30 replications.
    #[arg(long = "paper-scale")]
    paper_scale: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate(opts) => simulate(&Settings::load(&opts)?),
        Command::Estimate { input, opts } => estimate(&input, &Settings::load(&opts)?),
        Command::Case(opts) => case(&Settings::load(&opts)?),
        Command::Table(opts) => table(&Settings::load(&opts)?),
        Command::Selftest(opts) => selftest(&Settings::load(&opts)?),
    }
}

fn warn_regularity(settings: &Settings) -> Result<()> {
    if let Some(excess) = limit_regularity_excess(&settings.family()?.build()?) {
        eprintln!(
            "warning: H(t) is not below h_lo + 1/2 (excess {excess:.3}); the regularity theory does not cover this family"
        );
    }
    Ok(())
}

fn simulate(settings: &Settings) -> Result<ExitCode> {
    let spec = settings.family()?;
    let family = spec.build()?;
    let sim = settings.sim_config()?;
    warn_regularity(settings)?;
    let out = settings.output_dir();
    create_output_dir(&out)?;
    let path = simulate_path(&family, &sim)?;
    let csv = out.join("path.csv");
    write_path_csv(&csv, &path)?;
    write_path_meta(&meta_path(&csv), &path, Some(&spec))?;
    if settings.emit_svg() {
        std::fs::write(out.join("path.svg"), path_plot(&path).render())?;
    }
    println!(
        "simulated {} path: J={}, n={}, seed={}, {} points -> {}",
        path.family_name,
        sim.levels,
        sim.grid_exponent,
        sim.seed,
        path.values.len(),
        csv.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn estimate(input: &Path, settings: &Settings) -> Result<ExitCode> {
    let (times, values) = read_path_csv(input)?;
    let meta = read_path_meta(&meta_path(input))?;
    let expected = (1usize << meta.config.grid_exponent) + 1;
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "{}: {} rows, but n = {} in the metadata implies {expected}",
            input.display(),
            values.len(),
            meta.config.grid_exponent
        )));
    }
    let estimator = settings.estimator_config(meta.config.grid_exponent)?;
    let path = PathSample {
        times,
        values,
        config: meta.config,
        family_name: meta.family_name.clone(),
        family_params: meta.family_params.clone(),
        dropped_mass: meta.dropped_mass,
    };
    let family = meta.family.as_ref().map(|f| f.build()).transpose()?;
    let intervals = partition(estimator.intervals);
    let grid = 1usize << path.config.grid_exponent;
    let est = if grid.is_multiple_of(estimator.resolution * estimator.dilation) {
        estimate_hurst(&path, &estimator, &intervals)?
    } else if let Some(family) = &family {
        let source = SeriesSource {
            family,
            levels: path.config.levels,
            seed: path.config.seed,
        };
        estimate_hurst(&source, &estimator, &intervals)?
    } else {
        return Err(Error::config(
            "N",
            format!(
                "resolutions N = {} and QN = {} are not on the 2^{} grid and the metadata names no family to evaluate",
                estimator.resolution,
                estimator.resolution * estimator.dilation,
                path.config.grid_exponent
            ),
        ));
    };
    let h_true = family
        .as_ref()
        .and_then(|f| true_curve(f, &est.interval_mids));
    let out = settings.output_dir();
    create_output_dir(&out)?;
    let csv = out.join("estimate.csv");
    write_estimate_csv(&csv, &est, h_true.as_deref())?;
    if settings.emit_svg() {
        if let Some(f) = &family {
            std::fs::write(
                out.join("hurst.svg"),
                hurst_plot(&est, h_true.as_deref(), f).render(),
            )?;
        }
    }
    let mean = est.h_raw.iter().sum::<f64>() / est.h_raw.len() as f64;
    println!(
        "estimated {} intervals from {}: mean h_raw {mean:.4} -> {}",
        est.h_raw.len(),
        input.display(),
        csv.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn case(settings: &Settings) -> Result<ExitCode> {
    let sim = settings.sim_config()?;
    let config = ExperimentConfig {
        family: settings.family()?,
        estimator: settings.estimator_config(sim.grid_exponent)?,
        sim,
        replications: settings.replications(1)?,
        output_dir: settings.output_dir(),
        emit_svg: settings.emit_svg(),
        workers: settings.workers()?,
    };
    let report = run_case(&config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for rep in &report.replications {
        println!("{rep}");
    }
    Ok(ExitCode::SUCCESS)
}

fn table(settings: &Settings) -> Result<ExitCode> {
    let config = settings.table_config()?;
    let report = replicate_table(&config)?;
    println!("J,n,avg_abs_diff,max_abs_diff,mse");
    for row in &report.rows {
        let s = &row.stats;
        println!(
            "{},{},{:.4},{:.4},{:.4}",
            s.levels, s.grid_exponent, s.avg_abs, s.max_abs, s.mse
        );
    }
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest(settings: &Settings) -> Result<ExitCode> {
    let outcomes = ghbmp::selftest::run_all(settings.seed()?);
    for o in &outcomes {
        println!("{o}");
    }
    Ok(if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
