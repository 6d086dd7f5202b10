//! Experiment runner behind the `spline-llt` binary.
//!
//! A run is described by an [`ExperimentConfig`], built from an optional flat
//! `key = value` file overlaid with command-line flags. It produces
//! [`ExperimentRecord`] rows (CSV) and a JSON [`Summary`] with fitted
//! log-log slopes and named checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::charprob::{self, InversionRule};
use crate::error::Error;
use crate::knotset::{family, m3, x_l3_cubed, Family, KnotVector};
use crate::montecarlo::{self, Grid2d};
use crate::seminorm::{self, GridSpec};
use crate::specfun;
use crate::validate;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 12] = [
    "family",
    "n",
    "m3",
    "sum_abs_x3",
    "p",
    "q",
    "r",
    "error_value",
    "argmax",
    "noise_floor",
    "runtime_ms",
    "seed",
];
pub const IDENTITY_XI: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
pub const IDENTITY_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_MC: usize = 1_000_000;

#[derive(Debug)]
pub enum HarnessError {
    /// Bad configuration; exit code 2.
    Config(String),
    /// An embedded assertion failed or a record is NaN; exit code 1.
    Assertion(String),
    Compute(Error),
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "configuration error: {m}"),
            HarnessError::Assertion(m) => write!(f, "assertion failed: {m}"),
            HarnessError::Compute(e) => write!(f, "{e}"),
            HarnessError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<Error> for HarnessError {
    fn from(e: Error) -> Self {
        HarnessError::Compute(e)
    }
}

pub type HResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Validate,
    Scaling,
    Identity,
    Corollary3,
    Corollary4,
    Inversion,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Validate,
        Experiment::Scaling,
        Experiment::Identity,
        Experiment::Corollary3,
        Experiment::Corollary4,
        Experiment::Inversion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Scaling => "scaling",
            Experiment::Identity => "identity",
            Experiment::Corollary3 => "corollary3",
            Experiment::Corollary4 => "corollary4",
            Experiment::Inversion => "inversion",
        }
    }

    fn default_n_list(self) -> Vec<usize> {
        match self {
            Experiment::Validate => vec![8, 16],
            Experiment::Scaling => vec![8, 16, 32, 64, 128],
            Experiment::Identity => vec![8, 12],
            Experiment::Corollary3 => vec![8, 12, 16],
            Experiment::Corollary4 => vec![16, 32, 64],
            Experiment::Inversion => vec![16],
        }
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;
    fn from_str(s: &str) -> HResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment {s:?}")))
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub families: Vec<Family>,
    pub n_list: Vec<usize>,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub n_mc: usize,
    pub seed: u64,
    /// Grid truncation; `None` means `max(8, n)` per record.
    pub grid_t: Option<f64>,
    pub grid_h: f64,
    pub output_path: Option<PathBuf>,
}

/// Unresolved settings: every field optional, merged file-then-flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub family: Option<String>,
    pub n: Option<String>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub r: Option<usize>,
    pub n_mc: Option<usize>,
    pub seed: Option<u64>,
    pub grid_t: Option<f64>,
    pub grid_h: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// `self` with every field that `other` sets replaced.
    pub fn overlay(self, other: Overrides) -> Overrides {
        Overrides {
            experiment: other.experiment.or(self.experiment),
            family: other.family.or(self.family),
            n: other.n.or(self.n),
            p: other.p.or(self.p),
            q: other.q.or(self.q),
            r: other.r.or(self.r),
            n_mc: other.n_mc.or(self.n_mc),
            seed: other.seed.or(self.seed),
            grid_t: other.grid_t.or(self.grid_t),
            grid_h: other.grid_h.or(self.grid_h),
            out: other.out.or(self.out),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> HResult<T> {
    v.trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value {v:?} for key {key:?}")))
}

/// Parses the flat config format: one `key = value` per line, `#` comments.
/// Keys match the CLI flags without dashes (`grid-T`, `grid_T`, `N`, ...).
pub fn parse_config_text(text: &str) -> HResult<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = k.trim().replace('_', "-");
        let v = v.trim();
        match key.as_str() {
            "experiment" => o.experiment = Some(v.to_string()),
            "family" | "families" => o.family = Some(v.to_string()),
            "n" => o.n = Some(v.to_string()),
            "p" => o.p = Some(parse_value(&key, v)?),
            "q" => o.q = Some(parse_value(&key, v)?),
            "r" => o.r = Some(parse_value(&key, v)?),
            "N" => o.n_mc = Some(parse_value(&key, v)?),
            "seed" => o.seed = Some(parse_value(&key, v)?),
            "grid-T" => o.grid_t = Some(parse_value(&key, v)?),
            "grid-h" => o.grid_h = Some(parse_value(&key, v)?),
            "out" => o.out = Some(PathBuf::from(v)),
            _ => {
                return Err(HarnessError::Config(format!(
                    "line {}: unknown key {:?}",
                    lineno + 1,
                    k.trim()
                )))
            }
        }
    }
    Ok(o)
}

pub fn load_config_file(path: &Path) -> HResult<Overrides> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> HResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_value(key, t))
        .collect()
}

impl ExperimentConfig {
    /// Resolves overrides into a config. The seed comes from the overrides
    /// (flag or file), else `SPLINE_LLT_SEED`, else [`DEFAULT_SEED`].
    pub fn resolve(o: Overrides) -> HResult<Self> {
        let experiment: Experiment = o
            .experiment
            .as_deref()
            .ok_or_else(|| HarnessError::Config("no experiment given".into()))?
            .parse()?;
        let families = match &o.family {
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<Family>()
                        .map_err(|e| HarnessError::Config(e.to_string()))
                })
                .collect::<HResult<Vec<_>>>()?,
            None => vec![Family::Equispaced],
        };
        let n_list = match &o.n {
            Some(s) => parse_list::<usize>("n", s)?,
            None => experiment.default_n_list(),
        };
        let seed = montecarlo::resolve_seed(o.seed, DEFAULT_SEED)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let cfg = ExperimentConfig {
            experiment,
            families,
            n_list,
            p: o.p.unwrap_or(0),
            q: o.q.unwrap_or(0),
            r: o.r.unwrap_or(0),
            n_mc: o.n_mc.unwrap_or(DEFAULT_N_MC),
            seed,
            grid_t: o.grid_t,
            grid_h: o.grid_h.unwrap_or(seminorm::MAX_H),
            output_path: o.out,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Rejects combinations that violate a module precondition.
    pub fn check(&self) -> HResult<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.families.is_empty() {
            return bad("empty family list".into());
        }
        if self.n_list.is_empty() {
            return bad("empty n list".into());
        }
        if self.n_list.iter().any(|&n| n < 2) {
            return bad("every n must be at least 2".into());
        }
        if self.p + self.q > seminorm::MAX_PQ {
            return bad(format!("p + q must be at most {}", seminorm::MAX_PQ));
        }
        GridSpec::new(self.grid_t.unwrap_or(seminorm::MIN_T), self.grid_h)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let max_n = *self.n_list.iter().max().unwrap();
        let min_n = *self.n_list.iter().min().unwrap();
        match self.experiment {
            Experiment::Scaling => {
                if self.q + self.r + 4 > min_n {
                    return bad(format!(
                        "q + r = {} needs n >= {}",
                        self.q + self.r,
                        self.q + self.r + 4
                    ));
                }
            }
            Experiment::Identity | Experiment::Corollary3 => {
                if max_n > crate::splinecore::ORACLE_MAX_N {
                    return bad(format!(
                        "n must be at most {}",
                        crate::splinecore::ORACLE_MAX_N
                    ));
                }
                if self.r > seminorm::COROLLARY3_MAX_R {
                    return bad(format!("r must be at most {}", seminorm::COROLLARY3_MAX_R));
                }
                if self.experiment == Experiment::Corollary3 && self.q > seminorm::COROLLARY3_MAX_Q
                {
                    return bad(format!("q must be at most {}", seminorm::COROLLARY3_MAX_Q));
                }
            }
            Experiment::Corollary4 => {
                if self.q != 0 {
                    return bad("corollary4 supports q = 0 only".into());
                }
                if self.n_mc < 100_000 {
                    return bad("corollary4 needs N >= 100000".into());
                }
            }
            Experiment::Inversion => {
                if max_n > charprob::INVERSION_MAX_N || min_n < 4 {
                    return bad(format!(
                        "inversion needs 4 <= n <= {}",
                        charprob::INVERSION_MAX_N
                    ));
                }
                if self.n_mc < 10_000 {
                    return bad("inversion needs N >= 10000".into());
                }
            }
            Experiment::Validate => {}
        }
        Ok(())
    }

    fn grid_for(&self, n: usize) -> HResult<GridSpec> {
        let g = match self.grid_t {
            Some(t) => GridSpec::new(t, self.grid_h),
            None => GridSpec::for_n(n, self.grid_h),
        };
        g.map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub family: String,
    pub n: usize,
    pub m3: f64,
    pub sum_abs_x3: f64,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub error_value: f64,
    pub argmax: f64,
    pub noise_floor: f64,
    pub runtime_ms: f64,
    pub seed: u64,
}

/// Least-squares line through `(ln n, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> crate::error::Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidArgument(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all n values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / m).sqrt(),
        points: points.len(),
    })
}

/// Slope of `error_value` against `n` for each family label.
pub fn fit_slope(records: &[ExperimentRecord]) -> BTreeMap<String, crate::error::Result<SlopeFit>> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.family.clone())
            .or_default()
            .push((r.n as f64, r.error_value));
    }
    groups
        .into_iter()
        .map(|(k, pts)| (k, fit_loglog(&pts)))
        .collect()
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub records: usize,
    pub slopes: BTreeMap<String, SlopeFit>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    label: &str,
    kv: &KnotVector,
    cfg: &ExperimentConfig,
    r: usize,
    error_value: f64,
    argmax: f64,
    noise_floor: f64,
    started: Instant,
) -> ExperimentRecord {
    ExperimentRecord {
        family: label.to_string(),
        n: kv.n(),
        m3: m3(kv),
        sum_abs_x3: x_l3_cubed(kv),
        p: cfg.p,
        q: cfg.q,
        r,
        error_value,
        argmax,
        noise_floor,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        seed: cfg.seed,
    }
}

/// Knot family for record `(kind, n)`; random families use the run seed.
fn knots(kind: Family, n: usize, seed: u64) -> HResult<KnotVector> {
    Ok(family(kind, n, seed)?)
}

fn run_scaling(cfg: &ExperimentConfig, out: &mut Vec<ExperimentRecord>) -> HResult<()> {
    for &fam in &cfg.families {
        for &n in &cfg.n_list {
            let started = Instant::now();
            let kv = knots(fam, n, cfg.seed)?;
            let g = cfg.grid_for(n)?;
            let res = if cfg.r == 0 {
                seminorm::theorem1_error(&kv, cfg.p, cfg.q, g)
            } else {
                seminorm::corollary2_error(&kv, cfg.p, cfg.q, cfg.r, g)
            };
            out.push(match res {
                Ok(s) => record(
                    fam.name(),
                    &kv,
                    cfg,
                    cfg.r,
                    s.value,
                    s.argmax_t,
                    0.0,
                    started,
                ),
                Err(Error::PrecisionLoss { .. }) => record(
                    fam.name(),
                    &kv,
                    cfg,
                    cfg.r,
                    f64::NAN,
                    f64::NAN,
                    0.0,
                    started,
                ),
                Err(e) => return Err(e.into()),
            });
        }
    }
    Ok(())
}

/// Largest relative disagreement between the Laguerre form, the 2F0 form,
/// the power series and quadrature, over `IDENTITY_XI`.
pub fn identity_discrepancy(kv: &KnotVector, r: usize) -> crate::error::Result<(f64, f64)> {
    let mut worst = (0.0, IDENTITY_XI[0]);
    for &xi in &IDENTITY_XI {
        let a = specfun::corollary3_sum(kv, r, xi)?;
        let others = [
            specfun::corollary3_hypergeometric(kv, r, xi).to_complex(),
            specfun::corollary3_series(kv, r, xi).to_complex(),
            charprob::fourier_moment_quadrature(kv, xi, r)?,
        ];
        for b in others {
            let rel = (a - b).norm() / a.norm();
            if rel.is_nan() || rel > worst.0 {
                worst = (rel, xi);
            }
        }
    }
    Ok(worst)
}

fn run_identity(
    cfg: &ExperimentConfig,
    out: &mut Vec<ExperimentRecord>,
    checks: &mut Vec<Check>,
) -> HResult<()> {
    for &fam in &cfg.families {
        for &n in &cfg.n_list {
            let kv = knots(fam, n, cfg.seed)?;
            for r in 0..=cfg.r {
                let started = Instant::now();
                let (rec, ok) = match identity_discrepancy(&kv, r) {
                    Ok((err, xi)) => (
                        record(fam.name(), &kv, cfg, r, err, xi, 0.0, started),
                        err <= IDENTITY_TOL,
                    ),
                    Err(Error::PrecisionLoss { .. }) => (
                        record(fam.name(), &kv, cfg, r, f64::NAN, f64::NAN, 0.0, started),
                        false,
                    ),
                    Err(e) => return Err(e.into()),
                };
                checks.push(Check::new(
                    format!("identity/{}/n{n}/r{r}", fam.name()),
                    ok,
                    format!("max relative discrepancy {:e}", rec.error_value),
                ));
                out.push(rec);
            }
        }
    }
    Ok(())
}

fn run_corollary3(cfg: &ExperimentConfig, out: &mut Vec<ExperimentRecord>) -> HResult<()> {
    for &fam in &cfg.families {
        for &n in &cfg.n_list {
            let started = Instant::now();
            let kv = knots(fam, n, cfg.seed)?;
            let g = GridSpec::new(cfg.grid_t.unwrap_or(seminorm::MIN_T), cfg.grid_h)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            out.push(
                match seminorm::corollary3_error(&kv, cfg.p, cfg.q, cfg.r, g) {
                    Ok(s) => record(
                        fam.name(),
                        &kv,
                        cfg,
                        cfg.r,
                        s.value,
                        s.argmax_t,
                        0.0,
                        started,
                    ),
                    Err(Error::PrecisionLoss { .. }) => record(
                        fam.name(),
                        &kv,
                        cfg,
                        cfg.r,
                        f64::NAN,
                        f64::NAN,
                        0.0,
                        started,
                    ),
                    Err(e) => return Err(e.into()),
                },
            );
        }
    }
    Ok(())
}

fn run_corollary4(
    cfg: &ExperimentConfig,
    out: &mut Vec<ExperimentRecord>,
    checks: &mut Vec<Check>,
) -> HResult<()> {
    for &fam in &cfg.families {
        for &n in &cfg.n_list {
            let started = Instant::now();
            let kv = knots(fam, n, cfg.seed)?;
            let g = GridSpec::new(cfg.grid_t.unwrap_or(seminorm::MIN_T), cfg.grid_h)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let (c, s) = seminorm::corollary4_error(&kv, cfg.p, 0, g, cfg.n_mc, cfg.seed)?;
            let bound = 5.0 * m3(&kv);
            for (part, res) in [("cos", c), ("sin", s)] {
                let label = format!("{}:{part}", fam.name());
                checks.push(Check::new(
                    format!("corollary4/{label}/n{n}"),
                    res.value <= res.noise_floor + bound,
                    format!(
                        "error {:e}, noise floor {:e}, 5 m3 {:e}",
                        res.value, res.noise_floor, bound
                    ),
                ));
                out.push(record(
                    &label,
                    &kv,
                    cfg,
                    0,
                    res.value,
                    res.argmax_t,
                    res.noise_floor,
                    started,
                ));
            }
        }
    }
    Ok(())
}

/// Comparison of the inverted `PDF_Q` with a Monte Carlo histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionComparison {
    /// Cells with expected count at least 20.
    pub retained: usize,
    /// Cells whose difference exceeds 4 standard errors.
    pub violations: usize,
    pub max_abs_diff: f64,
    pub max_z: f64,
    pub worst_cell: [f64; 2],
    /// Standard error of the histogram at `worst_cell`.
    pub worst_se: f64,
    pub max_imag: f64,
}

/// 40 x 40 cells over `[-5, 5]^2` (five standard deviations of each
/// coordinate of `Q`).
pub fn default_q_grid() -> Grid2d {
    Grid2d {
        lo: [-5.0, -5.0],
        hi: [5.0, 5.0],
        bins: [40, 40],
    }
}

pub fn compare_inversion(
    kv: &KnotVector,
    n_samples: usize,
    seed: u64,
) -> crate::error::Result<InversionComparison> {
    let grid = default_q_grid();
    let rule = InversionRule::new(kv)?;
    let avg = rule.grid_cell_averages(&grid);
    let hist = montecarlo::mc_pdf_q(kv, n_samples, grid, seed)?;
    let cell = grid.cell_size();
    let area = cell[0] * cell[1];
    let mut cmp = InversionComparison {
        retained: 0,
        violations: 0,
        max_abs_diff: 0.0,
        max_z: 0.0,
        worst_cell: [0.0, 0.0],
        worst_se: 0.0,
        max_imag: 0.0,
    };
    for i in 0..grid.bins[0] {
        for j in 0..grid.bins[1] {
            let idx = i * grid.bins[1] + j;
            let exact = avg[idx];
            cmp.max_imag = cmp.max_imag.max(exact.im.abs());
            if exact.re * area * (n_samples as f64) < 20.0 {
                continue;
            }
            cmp.retained += 1;
            let diff = (hist.density[idx] - exact.re).abs();
            let z = diff / hist.std_error[idx];
            if z > 4.0 {
                cmp.violations += 1;
            }
            if z > cmp.max_z {
                cmp.max_z = z;
                cmp.worst_cell = grid.center(i, j);
                cmp.worst_se = hist.std_error[idx];
            }
            cmp.max_abs_diff = cmp.max_abs_diff.max(diff);
        }
    }
    Ok(cmp)
}

fn run_inversion(
    cfg: &ExperimentConfig,
    out: &mut Vec<ExperimentRecord>,
    checks: &mut Vec<Check>,
) -> HResult<()> {
    for &fam in &cfg.families {
        for &n in &cfg.n_list {
            let started = Instant::now();
            let kv = knots(fam, n, cfg.seed)?;
            let cmp = compare_inversion(&kv, cfg.n_mc, cfg.seed)?;
            checks.push(Check::new(
                format!("inversion/{}/n{n}", fam.name()),
                cmp.violations == 0 && cmp.max_imag < 1e-8,
                format!(
                    "{} retained cells, {} beyond 4 SE, max z {:.3}, max imaginary part {:e}",
                    cmp.retained, cmp.violations, cmp.max_z, cmp.max_imag
                ),
            ));
            out.push(record(
                fam.name(),
                &kv,
                cfg,
                0,
                cmp.max_abs_diff,
                cmp.worst_cell[0],
                4.0 * cmp.worst_se,
                started,
            ));
        }
    }
    Ok(())
}

/// Runs the experiment; the summary's `passed` flag drives the exit code.
pub fn run(cfg: &ExperimentConfig) -> HResult<RunOutput> {
    cfg.check()?;
    let mut records = Vec::new();
    let mut checks = Vec::new();
    match cfg.experiment {
        Experiment::Validate => checks = validate::run_suite(cfg.seed, cfg.n_mc.min(200_000)),
        Experiment::Scaling => run_scaling(cfg, &mut records)?,
        Experiment::Identity => run_identity(cfg, &mut records, &mut checks)?,
        Experiment::Corollary3 => run_corollary3(cfg, &mut records)?,
        Experiment::Corollary4 => run_corollary4(cfg, &mut records, &mut checks)?,
        Experiment::Inversion => run_inversion(cfg, &mut records, &mut checks)?,
    }
    records.sort_by(|a, b| {
        (a.family.as_str(), a.n, a.p, a.q, a.r).cmp(&(b.family.as_str(), b.n, b.p, b.q, b.r))
    });
    let nan_rows = records.iter().filter(|r| r.error_value.is_nan()).count();
    checks.push(Check::new(
        "records/no-nan",
        nan_rows == 0,
        format!("{nan_rows} of {} records are NaN", records.len()),
    ));
    let mut slopes = BTreeMap::new();
    if matches!(cfg.experiment, Experiment::Scaling | Experiment::Corollary3) {
        for (fam, fit) in fit_slope(&records) {
            if let Ok(f) = fit {
                slopes.insert(fam, f);
            }
        }
    }
    if cfg.experiment == Experiment::Scaling {
        // error / m3 must stay bounded
        let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for r in &records {
            groups
                .entry(&r.family)
                .or_default()
                .push((r.n as f64, r.error_value / r.m3));
        }
        for (fam, pts) in groups {
            if let Ok(f) = fit_loglog(&pts) {
                checks.push(Check::new(
                    format!("scaling/{fam}/ratio-bounded"),
                    f.slope <= 0.1,
                    format!("slope of ln(error/m3) vs ln n = {:.4}", f.slope),
                ));
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        seed: cfg.seed,
        records: records.len(),
        slopes,
        checks,
        passed,
    };
    Ok(RunOutput { records, summary })
}

/// Writes the records as RFC 4180 CSV with the fixed header.
pub fn write_csv<W: std::io::Write>(w: W, records: &[ExperimentRecord]) -> HResult<()> {
    let mut wr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wr.write_record(CSV_HEADER)
            .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    for r in records {
        wr.serialize(r)
            .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    wr.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// `results.csv` → `results.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    csv_path.with_file_name(format!("{stem}.summary.json"))
}

/// Writes CSV and JSON summary to `cfg.output_path`, or the CSV to `stdout`
/// and the summary to `stderr` when no path is configured.
pub fn emit(cfg: &ExperimentConfig, out: &RunOutput) -> HResult<()> {
    let json =
        serde_json::to_string_pretty(&out.summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    match &cfg.output_path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
            }
            let f = std::fs::File::create(path)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            write_csv(f, &out.records)?;
            std::fs::write(summary_path(path), json + "\n")
                .map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        None => {
            write_csv(std::io::stdout().lock(), &out.records)?;
            eprintln!("{json}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n| (n, 3.0 / n))
            .collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        let flat: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&n| (n, 0.2)).collect();
        assert!(fit_loglog(&flat).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn two_points_are_insufficient() {
        assert!(matches!(
            fit_loglog(&[(8.0, 1.0), (16.0, 0.5)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn config_text_round() {
        let o =
            parse_config_text("experiment = scaling\n# comment\nn = 8, 16\ngrid_T = 20\nN=5000\n")
                .unwrap();
        assert_eq!(o.n.as_deref(), Some("8, 16"));
        assert_eq!(o.grid_t, Some(20.0));
        assert_eq!(o.n_mc, Some(5000));
        assert!(parse_config_text("bogus = 1").is_err());
    }

    #[test]
    fn empty_n_list_is_config_error() {
        let o = Overrides {
            experiment: Some("scaling".into()),
            n: Some(String::new()),
            seed: Some(1),
            ..Default::default()
        };
        let e = ExperimentConfig::resolve(o).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
