//! Run configuration: a JSON file merged with command-line overrides, then
//! validated before anything is computed.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gtdyn::verify::Mode;
use gtdyn::{Deformation, Error, GTPattern, OmegaPoint, Result, Signature};
use serde::{Deserialize, Serialize};

/// Which construction `gen` uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Determinantal,
    Fusion,
    Both,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaPoint>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Deformation>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(i64, i64)>,
    /// Support box `[lo, hi]` of the fusion weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_box: Option<(i64, i64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Signature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<GTPattern>,
    /// Initial measure CSV for `evolve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Poisson truncation tolerance for `evolve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupt_phi: Option<bool>,
    /// Acceptance criteria run by `verify`; empty means all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<u32>>,
}

/// Flags mirroring [`RunConfig`]; each one overrides the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Boundary point as JSON, e.g. '{"beta_plus":[0.3]}'
    #[arg(long, global = true)]
    pub omega: Option<String>,
    /// Level N
    #[arg(short = 'n', long = "level", global = true)]
    pub n: Option<usize>,
    /// "classical" or a number in (0,1)
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// State box as lo,hi
    #[arg(long = "box", global = true, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Fusion weight box as lo,hi
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub weight_box: Option<String>,
    /// Comma-separated times
    #[arg(long, global = true)]
    pub times: Option<String>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long, global = true, value_enum)]
    pub route: Option<Route>,
    /// Start signature, e.g. 1,0,-1
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Start pattern as nested JSON arrays, e.g. '[[0],[1,0]]'
    #[arg(long, global = true)]
    pub pattern: Option<String>,
    /// Initial measure CSV (signature,probability)
    #[arg(long, global = true)]
    pub measure: Option<PathBuf>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(short, long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; GTDYN_WORKERS takes precedence
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Negate the largest phi coefficient before the positivity checks
    #[arg(long, global = true)]
    pub corrupt_phi: bool,
    /// Comma-separated acceptance criteria to run
    #[arg(long, global = true)]
    pub only: Option<String>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "float" => Ok(Mode::Float),
        "rational" => Ok(Mode::Rational),
        _ => Err(format!("mode must be float or rational, got {s:?}")),
    }
}

fn parse_q(s: &str) -> Result<Deformation> {
    if s == "classical" {
        return Ok(Deformation::Classical);
    }
    let q: f64 = s
        .parse()
        .map_err(|_| Error::invalid(format!("q must be \"classical\" or a number in (0,1], got {s:?}")))?;
    Deformation::new(q)
}

fn parse_pair(flag: &str, s: &str) -> Result<(i64, i64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if let [a, b] = parts[..] {
        if let (Ok(a), Ok(b)) = (a.parse(), b.parse()) {
            return Ok((a, b));
        }
    }
    Err(Error::invalid(format!("--{flag} must be two integers lo,hi, got {s:?}")))
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("--{flag}: cannot parse {t:?}")))
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }

    /// The config file (if any) with every given flag applied on top.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &o.omega {
            c.omega = Some(serde_json::from_str(s).map_err(|e| Error::invalid(format!("--omega: {e}")))?);
        }
        if o.n.is_some() {
            c.n = o.n;
        }
        if let Some(s) = &o.q {
            c.q = Some(parse_q(s)?);
        }
        if let Some(s) = &o.bounds {
            c.bounds = Some(parse_pair("box", s)?);
        }
        if let Some(s) = &o.weight_box {
            c.weight_box = Some(parse_pair("weight-box", s)?);
        }
        if let Some(s) = &o.times {
            c.times = Some(parse_list("times", s)?);
        }
        if o.steps.is_some() {
            c.steps = o.steps;
        }
        if o.seed.is_some() {
            c.seed = o.seed;
        }
        if o.mode.is_some() {
            c.mode = o.mode;
        }
        if o.route.is_some() {
            c.route = o.route;
        }
        if let Some(s) = &o.start {
            c.start = Some(s.parse()?);
        }
        if let Some(s) = &o.pattern {
            c.pattern = Some(serde_json::from_str(s).map_err(|e| Error::invalid(format!("--pattern: {e}")))?);
        }
        if o.measure.is_some() {
            c.measure = o.measure.clone();
        }
        if o.samples.is_some() {
            c.samples = o.samples;
        }
        if o.tol.is_some() {
            c.tol = o.tol;
        }
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if o.workers.is_some() {
            c.workers = o.workers;
        }
        if o.corrupt_phi {
            c.corrupt_phi = Some(true);
        }
        if let Some(s) = &o.only {
            c.only = Some(parse_list("only", s)?);
        }
        Ok(c)
    }

    pub fn omega(&self) -> Result<OmegaPoint> {
        let om = self.omega.clone().unwrap_or_default();
        om.validate()?;
        Ok(om)
    }

    pub fn level(&self) -> Result<usize> {
        match self.n {
            None => Err(Error::invalid("N is required")),
            Some(0) => Err(Error::invalid("precondition N >= 1 violated: got N = 0")),
            Some(n) => Ok(n),
        }
    }

    pub fn deformation(&self) -> Deformation {
        self.q.unwrap_or(Deformation::Classical)
    }

    /// `q` for commands defined only for `0 < q < 1`.
    pub fn quantum(&self, what: &str) -> Result<f64> {
        match self.deformation() {
            Deformation::Quantum(q) => Ok(q),
            Deformation::Classical => Err(Error::invalid(format!("{what} needs q in (0,1), got classical"))),
        }
    }

    pub fn bounds(&self) -> Result<(i64, i64)> {
        let (lo, hi) = self.bounds.ok_or_else(|| Error::invalid("box is required"))?;
        if lo > hi {
            return Err(Error::invalid(format!("precondition lo <= hi violated for box ({lo}, {hi})")));
        }
        Ok((lo, hi))
    }

    pub fn weight_bounds(&self) -> Result<(i64, i64)> {
        let (lo, hi) = self.weight_box.unwrap_or((-2, 2));
        if lo > hi {
            return Err(Error::invalid(format!("precondition lo <= hi violated for weight_box ({lo}, {hi})")));
        }
        Ok((lo, hi))
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let ts = self.times.clone().unwrap_or_else(|| vec![1.0]);
        if ts.is_empty() {
            return Err(Error::invalid("times must not be empty"));
        }
        if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::invalid(format!("precondition t >= 0 violated: got {t}")));
        }
        Ok(ts)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::invalid("seed is required for sampling"))
    }

    pub fn samples(&self) -> Result<usize> {
        match self.samples.unwrap_or(1) {
            0 => Err(Error::invalid("samples must be at least 1")),
            s => Ok(s),
        }
    }

    pub fn tol(&self) -> Result<f64> {
        let tol = self.tol.unwrap_or(1e-12);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid(format!("tol must lie in (0,1), got {tol}")));
        }
        Ok(tol)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// `GTDYN_WORKERS`, then the config/flag value; `None` means the default.
    pub fn workers(&self) -> Result<Option<usize>> {
        let w = match std::env::var("GTDYN_WORKERS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("GTDYN_WORKERS must be a positive integer, got {s:?}")))?,
            ),
            Err(_) => self.workers,
        };
        if w == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(w)
    }
}
