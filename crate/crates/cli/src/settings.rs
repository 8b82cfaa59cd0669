//! Config-file values merged with command-line flags (flags win).
//!
//! ```ini
//! [simulator]
//! family = sinusoidal
//! J = 14
//! n = 10
//! seed = 7
//! tail_tol = 0
//!
//! [estimator]
//! N = 512
//! Q = 2
//! L = 2
//! P = 100
//! span = 0.25
//!
//! [experiment]
//! reps = 30
//! out = results
//! svg = true
//! workers = 4
//! paper_scale = false
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;

use ghbmp::experiment::{TableConfig, FULL_PAIRS};
use ghbmp::{Error, EstimatorConfig, FamilySpec, Result, SimConfig};

use crate::Opts;

const SECTIONS: [(&str, &[&str]); 3] = [
    ("simulator", &["family", "J", "n", "seed", "tail_tol"]),
    ("estimator", &["N", "Q", "L", "P", "span"]),
    (
        "experiment",
        &["reps", "out", "svg", "workers", "paper_scale"],
    ),
];

#[derive(Debug, Default)]
pub struct Settings {
    family: Option<String>,
    levels: Option<String>,
    grid_exponent: Option<String>,
    seed: Option<String>,
    tail_tol: Option<String>,
    resolution: Option<String>,
    dilation: Option<String>,
    order: Option<String>,
    intervals: Option<String>,
    span: Option<String>,
    reps: Option<String>,
    out: Option<String>,
    svg: Option<String>,
    workers: Option<String>,
    paper_scale: Option<String>,
}

fn parse<T: FromStr>(field: &str, value: &Option<String>) -> Result<Option<T>> {
    value
        .as_deref()
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::config(field, format!("cannot parse {v:?}")))
        })
        .transpose()
}

fn parse_bool(field: &str, value: &Option<String>) -> Result<bool> {
    match value.as_deref().map(str::trim) {
        None => Ok(false),
        Some("true" | "yes" | "1") => Ok(true),
        Some("false" | "no" | "0") => Ok(false),
        Some(v) => Err(Error::config(field, format!("{v:?} is not a boolean"))),
    }
}

impl Settings {
    pub fn load(opts: &Opts) -> Result<Self> {
        let mut s = match &opts.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        let set = |slot: &mut Option<String>, flag: Option<String>| {
            if flag.is_some() {
                *slot = flag;
            }
        };
        set(&mut s.family, opts.family.clone());
        set(&mut s.levels, opts.levels.map(|v| v.to_string()));
        set(
            &mut s.grid_exponent,
            opts.grid_exponent.map(|v| v.to_string()),
        );
        set(&mut s.seed, opts.seed.map(|v| v.to_string()));
        set(&mut s.tail_tol, opts.tail_tol.map(|v| v.to_string()));
        set(&mut s.resolution, opts.resolution.map(|v| v.to_string()));
        set(&mut s.dilation, opts.dilation.map(|v| v.to_string()));
        set(&mut s.order, opts.order.map(|v| v.to_string()));
        set(&mut s.intervals, opts.intervals.map(|v| v.to_string()));
        set(&mut s.span, opts.span.map(|v| v.to_string()));
        set(&mut s.reps, opts.reps.map(|v| v.to_string()));
        set(
            &mut s.out,
            opts.out.as_ref().map(|p| p.display().to_string()),
        );
        set(&mut s.workers, opts.workers.map(|v| v.to_string()));
        if opts.svg {
            s.svg = Some("true".into());
        }
        if opts.paper_scale {
            s.paper_scale = Some("true".into());
        }
        s.check_bools()?;
        Ok(s)
    }

    fn from_file(path: &std::path::Path) -> Result<Self> {
        let ini = Ini::load_from_file(path).map_err(|e| match e {
            ini::Error::Io(io) => Error::Io(io),
            ini::Error::Parse(p) => Error::config("config", format!("{}: {p}", path.display())),
        })?;
        let mut s = Self::default();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            let Some((_, keys)) = SECTIONS.iter().find(|(name, _)| *name == section) else {
                if props.is_empty() {
                    continue;
                }
                return Err(Error::config(
                    "config",
                    format!("unknown section [{section}] in {}", path.display()),
                ));
            };
            for (key, value) in props.iter() {
                if !keys.contains(&key) {
                    return Err(Error::config(
                        key,
                        format!("not a key of section [{section}] in {}", path.display()),
                    ));
                }
                let slot = match key {
                    "family" => &mut s.family,
                    "J" => &mut s.levels,
                    "n" => &mut s.grid_exponent,
                    "seed" => &mut s.seed,
                    "tail_tol" => &mut s.tail_tol,
                    "N" => &mut s.resolution,
                    "Q" => &mut s.dilation,
                    "L" => &mut s.order,
                    "P" => &mut s.intervals,
                    "span" => &mut s.span,
                    "reps" => &mut s.reps,
                    "out" => &mut s.out,
                    "svg" => &mut s.svg,
                    "workers" => &mut s.workers,
                    _ => &mut s.paper_scale,
                };
                *slot = Some(value.to_string());
            }
        }
        Ok(s)
    }

    fn family_or(&self, default: FamilySpec) -> Result<FamilySpec> {
        match &self.family {
            Some(f) => f.parse(),
            None => Ok(default),
        }
    }

    pub fn family(&self) -> Result<FamilySpec> {
        self.family_or(FamilySpec::Constant(0.5))
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(parse("seed", &self.seed)?.unwrap_or(0))
    }

    fn tail_tol(&self) -> Result<f64> {
        Ok(parse("tail_tol", &self.tail_tol)?.unwrap_or(0.0))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let levels = parse("J", &self.levels)?.unwrap_or(12);
        let n = parse("n", &self.grid_exponent)?.unwrap_or(10);
        let config = SimConfig::new(levels, n, self.seed()?).with_tail_tol(self.tail_tol()?);
        config.validate()?;
        Ok(config)
    }

    /// Defaults to `Q = 2`, `L = 2`, `P = 100` and `N = 2^n / Q`.
    pub fn estimator_config(&self, grid_exponent: u32) -> Result<EstimatorConfig> {
        let mut config = EstimatorConfig::for_grid(grid_exponent);
        if let Some(q) = parse("Q", &self.dilation)? {
            config.dilation = q;
            config.resolution = (1usize << grid_exponent) / q.max(1);
        }
        if let Some(n) = parse("N", &self.resolution)? {
            config.resolution = n;
        }
        if let Some(l) = parse("L", &self.order)? {
            config.order = l;
        }
        if let Some(p) = parse("P", &self.intervals)? {
            config.intervals = p;
        }
        if let Some(span) = parse("span", &self.span)? {
            config.span = span;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn replications(&self, default: usize) -> Result<usize> {
        Ok(parse("reps", &self.reps)?.unwrap_or(default))
    }

    pub fn workers(&self) -> Result<usize> {
        Ok(parse("workers", &self.workers)?.unwrap_or(1))
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.out.as_deref().unwrap_or("out"))
    }

    pub fn emit_svg(&self) -> bool {
        parse_bool("svg", &self.svg).unwrap_or(false)
    }

    fn check_bools(&self) -> Result<()> {
        parse_bool("svg", &self.svg)?;
        parse_bool("paper_scale", &self.paper_scale)?;
        Ok(())
    }

    /// Desk-scale pairs with `R = 10` by default, the full sweep with
    /// `R = 30` under `paper_scale`, or the single pair given by `J` and `n`.
    pub fn table_config(&self) -> Result<TableConfig> {
        if self.resolution.is_some() {
            return Err(Error::config(
                "N",
                "the table derives N = 2^n / Q for each (J, n) pair; set Q instead",
            ));
        }
        let full = parse_bool("paper_scale", &self.paper_scale)?;
        let mut config = TableConfig::desk(self.seed()?);
        config.family = self.family_or(FamilySpec::Sinusoidal)?;
        if full {
            config.pairs = FULL_PAIRS.to_vec();
            config.replications = 30;
        }
        match (
            parse::<u32>("J", &self.levels)?,
            parse::<u32>("n", &self.grid_exponent)?,
        ) {
            (Some(levels), Some(n)) => config.pairs = vec![(levels, n)],
            (None, None) => {}
            _ => {
                return Err(Error::config(
                    "J",
                    "give both J and n to select a single (J, n) pair",
                ))
            }
        }
        config.replications = self.replications(config.replications)?;
        if let Some(q) = parse("Q", &self.dilation)? {
            config.dilation = q;
        }
        if let Some(l) = parse("L", &self.order)? {
            config.order = l;
        }
        if let Some(p) = parse("P", &self.intervals)? {
            config.intervals = p;
        }
        if let Some(span) = parse("span", &self.span)? {
            config.span = span;
        }
        config.tail_tol = self.tail_tol()?;
        config.workers = self.workers()?;
        config.output_dir = Some(self.output_dir());
        config.emit_svg = self.emit_svg();
        config.validate()?;
        Ok(config)
    }
}
