//! CSV and sidecar-metadata files.
//!
//! Numbers are written with 17 significant digits, so every `f64` survives a
//! round trip through text unchanged.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimator::EstimateSeries;
use crate::hurst::FamilySpec;
use crate::simulator::{PathSample, SimConfig};

use super::{BoxplotRow, DiffStats};

/// Full-precision decimal rendering.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

/// `t,x` rows, one per grid point.
pub fn write_path_csv(path: &Path, sample: &PathSample) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "x"]).map_err(csv_err)?;
    for (t, x) in sample.times.iter().zip(&sample.values) {
        w.write_record([fmt_f64(*t), fmt_f64(*x)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,x` file; returns `(times, values)`.
pub fn read_path_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(Error::Parse(format!(
            "{}: expected header t,x, found {:?}",
            path.display(),
            headers
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |field: &str| {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "{}: row {}: bad number {field:?}",
                    path.display(),
                    line + 2
                ))
            })
        };
        times.push(parse(&record[0])?);
        values.push(parse(&record[1])?);
    }
    Ok((times, values))
}

/// The sidecar of a path file: same basename, `.meta` suffix.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

/// Contents of a `.meta` sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeta {
    pub family: Option<FamilySpec>,
    pub family_name: String,
    pub family_params: String,
    pub config: SimConfig,
    pub dropped_mass: Option<f64>,
}

pub fn write_path_meta(
    path: &Path,
    sample: &PathSample,
    family: Option<&FamilySpec>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let c = &sample.config;
    writeln!(w, "family = {}", sample.family_name)?;
    writeln!(w, "family_params = {}", sample.family_params)?;
    if let Some(spec) = family {
        writeln!(w, "family_spec = {spec}")?;
    }
    writeln!(w, "J = {}", c.levels)?;
    writeln!(w, "n = {}", c.grid_exponent)?;
    writeln!(w, "seed = {}", c.seed)?;
    writeln!(w, "tail_tol = {}", c.tail_tol)?;
    match sample.dropped_mass {
        Some(m) => writeln!(w, "dropped_mass_bound = {}", fmt_f64(m))?,
        None => writeln!(w, "dropped_mass_bound = none")?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_meta(path: &Path) -> Result<PathMeta> {
    let reader = BufReader::new(File::open(path)?);
    let mut meta = PathMeta {
        family: None,
        family_name: String::new(),
        family_params: String::new(),
        config: SimConfig::new(0, 1, 0),
        dropped_mass: None,
    };
    let bad = |key: &str, value: &str| {
        Error::Parse(format!("{}: bad value {value:?} for {key}", path.display()))
    };
    for line in reader.lines() {
        let line = line?;
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "family" => meta.family_name = value.to_string(),
            "family_params" => meta.family_params = value.to_string(),
            "family_spec" => meta.family = Some(value.parse()?),
            "J" => meta.config.levels = value.parse().map_err(|_| bad(key, value))?,
            "n" => meta.config.grid_exponent = value.parse().map_err(|_| bad(key, value))?,
            "seed" => meta.config.seed = value.parse().map_err(|_| bad(key, value))?,
            "tail_tol" => meta.config.tail_tol = value.parse().map_err(|_| bad(key, value))?,
            "dropped_mass_bound" if value != "none" => {
                meta.dropped_mass = Some(value.parse().map_err(|_| bad(key, value))?)
            }
            _ => {}
        }
    }
    Ok(meta)
}

/// `interval_index,t_mid,h_true,h_raw,h_smooth`; `h_true` is left empty when
/// no true curve is known.
pub fn write_estimate_csv(path: &Path, est: &EstimateSeries, h_true: Option<&[f64]>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["interval_index", "t_mid", "h_true", "h_raw", "h_smooth"])
        .map_err(csv_err)?;
    for p in 0..est.h_raw.len() {
        let truth = h_true.map(|h| fmt_f64(h[p])).unwrap_or_default();
        w.write_record([
            p.to_string(),
            fmt_f64(est.interval_mids[p]),
            truth,
            fmt_f64(est.h_raw[p]),
            fmt_f64(est.h_smooth[p]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `J,n,avg_abs_diff,max_abs_diff,mse`
pub fn write_stats_csv(path: &Path, rows: &[DiffStats]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["J", "n", "avg_abs_diff", "max_abs_diff", "mse"])
        .map_err(csv_err)?;
    for s in rows {
        w.write_record([
            s.levels.to_string(),
            s.grid_exponent.to_string(),
            fmt_f64(s.avg_abs),
            fmt_f64(s.max_abs),
            fmt_f64(s.mse),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `J,n,replication,seed,min,q1,median,q3,max`; the last column is the
/// replication's maximum absolute difference.
pub fn write_boxplot_csv(path: &Path, rows: &[BoxplotRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "J",
        "n",
        "replication",
        "seed",
        "min",
        "q1",
        "median",
        "q3",
        "max",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.levels.to_string(),
            r.grid_exponent.to_string(),
            r.replication
                .map(|i| i.to_string())
                .unwrap_or_else(|| "averaged".into()),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        rec.extend(r.summary.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
