//! Preset simulation pipelines and their tabular results.
//!
//! Four presets are provided:
//!
//! * `fig1`: loss `E[sin Θ]` against the winsorization radius for a single
//!   strong spike, Gaussian and t₃ data, with and without outliers.
//! * `fig2`: loss in growing dimension for three radius rules, non-spiked
//!   and spiked models.
//! * `fig3`: Monte Carlo means of the weak and strong breakdown lower bounds
//!   over a radius grid.
//! * `fig4`: a single dataset contaminated with a growing number of
//!   outliers, with the observed angle next to the perturbation bounds.
//!
//! Every run is a pure function of `(preset, scale, seed)` apart from the
//! timestamp written into the metadata.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{perturbation_bound, wpca_breakdown_lower_bounds, Distribution, PopulationModel, WinsorizedSpectrum};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};
use crate::simulate::{apply_contamination, cell_stream, mean_and_se, sample_model, stream_rng, ContaminationPlan, OutlierRule};
use crate::subspace::{fit_pc_subspace_with, principal_angles, Subspace};
use crate::transform::{resolve_radius, DataMatrix, RadiusSpec, ResolvedRadius};

/// Tag identifying the build that produced a table.
pub const BUILD_TAG: &str = match option_env!("WPCA_BUILD_TAG") {
    Some(tag) => tag,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

/// The four preset experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    /// Scale used when none is given.
    pub fn default_scale(&self) -> f64 {
        match self {
            Preset::Fig2 => 0.2,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown preset {s:?}; expected fig1, fig2, fig3 or fig4")))
    }
}

/// Runs `preset` with its standard configuration at `scale`.
pub fn run_preset(preset: Preset, scale: f64, seed: u64) -> Result<ResultTable> {
    match preset {
        Preset::Fig1 => run_effect_of_radius(scale, seed),
        Preset::Fig2 => run_high_dim(scale, seed),
        Preset::Fig3 => BreakdownConfig::standard(scale, seed).and_then(|c| c.run()),
        Preset::Fig4 => run_perturbation_sweep(seed),
    }
}

/// A scenario parameter value. Numeric values compare by value, so
/// `Int(2) == Real(2.0)`.
#[derive(Debug, Clone)]
pub enum Param {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Param {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Param::Int(v) => Some(*v as f64),
            Param::Real(v) => Some(*v),
            Param::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Param::Text(s) => Some(s),
            _ => None,
        }
    }

    fn parse(s: &str) -> Param {
        if let Ok(v) = s.parse::<i64>() {
            Param::Int(v)
        } else if let Some(v) = parse_f64(s) {
            Param::Real(v)
        } else {
            Param::Text(s.to_string())
        }
    }
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        match (self.as_f64(), other.as_f64()) {
            (Some(a), Some(b)) => a == b,
            _ => self.as_str() == other.as_str(),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Int(v) => write!(f, "{v}"),
            Param::Real(v) => f.write_str(&fmt_f64(*v)),
            Param::Text(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Real(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl From<String> for Param {
    fn from(v: String) -> Self {
        Param::Text(v)
    }
}

/// One cell statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// Values of the table's parameter columns, in column order.
    pub params: Vec<Param>,
    pub statistic: String,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub error: Option<String>,
}

/// Long-format experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub preset: String,
    pub param_columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Ordered `key: value` pairs written as leading comment lines.
    pub metadata: Vec<(String, String)>,
}

const FIXED_COLUMNS: [&str; 4] = ["statistic", "value", "std_error", "error"];

impl ResultTable {
    pub fn new(preset: &str, param_columns: &[&str]) -> Self {
        Self {
            preset: preset.to_string(),
            param_columns: param_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            metadata: vec![("preset".into(), preset.to_string())],
        }
    }

    pub fn add_metadata(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn push(&mut self, params: Vec<Param>, statistic: &str, value: Option<f64>, std_error: Option<f64>) {
        debug_assert_eq!(params.len(), self.param_columns.len());
        self.rows.push(ResultRow {
            params,
            statistic: statistic.to_string(),
            value,
            std_error,
            error: None,
        });
    }

    fn push_error(&mut self, params: Vec<Param>, statistic: &str, err: &Error) {
        self.rows.push(ResultRow {
            params,
            statistic: statistic.to_string(),
            value: None,
            std_error: None,
            error: Some(err.to_string()),
        });
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.param_columns.iter().position(|c| c == name)
    }

    /// Parameter `name` of `row`.
    pub fn param<'a>(&self, row: &'a ResultRow, name: &str) -> Option<&'a Param> {
        self.column(name).and_then(|i| row.params.get(i))
    }

    /// Rows of `statistic` whose parameters satisfy every `(column, value)`
    /// filter; numeric filters match within `1e-12` relative.
    pub fn select(&self, statistic: &str, filters: &[(&str, Param)]) -> Vec<&ResultRow> {
        let idx: Vec<Option<usize>> = filters.iter().map(|(c, _)| self.column(c)).collect();
        self.rows
            .iter()
            .filter(|row| row.statistic == statistic)
            .filter(|row| {
                filters.iter().zip(&idx).all(|((_, want), i)| match i {
                    Some(i) => param_matches(&row.params[*i], want),
                    None => false,
                })
            })
            .collect()
    }

    /// The single matching row, if exactly one matches.
    pub fn lookup(&self, statistic: &str, filters: &[(&str, Param)]) -> Option<&ResultRow> {
        match self.select(statistic, filters).as_slice() {
            [row] => Some(*row),
            _ => None,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// Writes `# key: value` metadata lines, a header and one line per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").map_err(io_error)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let header = self.param_columns.iter().map(String::as_str).chain(FIXED_COLUMNS);
        w.write_record(header).map_err(csv_error)?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for row in &self.rows {
            let mut rec: Vec<String> = row.params.iter().map(Param::to_string).collect();
            rec.push(row.statistic.clone());
            rec.push(opt(row.value));
            rec.push(opt(row.std_error));
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush().map_err(io_error)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Numerical(e.to_string()))
    }

    /// Parses the output of [`ResultTable::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line.map_err(io_error)?;
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.trim().split_once(':').unwrap_or((meta.trim(), ""));
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let k = header.len().checked_sub(FIXED_COLUMNS.len()).filter(|&k| header[k..] == FIXED_COLUMNS);
        let k = k.ok_or_else(|| Error::invalid("result table header must end with statistic,value,std_error,error"))?;
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            parse_f64(s).map(Some).ok_or_else(|| Error::invalid(format!("bad number {s:?}")))
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            rows.push(ResultRow {
                params: rec.iter().take(k).map(Param::parse).collect(),
                statistic: rec[k].to_string(),
                value: num(&rec[k + 1])?,
                std_error: num(&rec[k + 2])?,
                error: Some(rec[k + 3].to_string()).filter(|s| !s.is_empty()),
            });
        }
        let preset = metadata
            .iter()
            .find(|(key, _)| key == "preset")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        Ok(Self {
            preset,
            param_columns: header[..k].to_vec(),
            rows,
            metadata,
        })
    }

    fn stamp(&mut self, seed: u64, scale: f64) {
        self.add_metadata("seed", seed);
        self.add_metadata("scale", fmt_f64(scale));
        self.add_metadata("build", BUILD_TAG);
    }

    fn finish(mut self) -> Self {
        self.add_metadata("timestamp", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        self
    }
}

fn param_matches(have: &Param, want: &Param) -> bool {
    match (have.as_f64(), want.as_f64()) {
        (Some(a), Some(b)) => a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
        _ => have.as_str() == want.as_str(),
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("i/o error: {e}"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv error: {e}"))
}

/// `k` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || k == 0 {
        return Err(Error::invalid(format!("bad log grid [{lo}, {hi}] with {k} points")));
    }
    if k == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect();
    g[0] = lo;
    g[k - 1] = hi;
    Ok(g)
}

/// Spearman rank correlation, ties given average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn median_norm(x: &DataMatrix) -> f64 {
    crate::transform::median(&x.row_norms())
}

fn max_norm(x: &DataMatrix) -> f64 {
    x.row_norms().into_iter().fold(0.0, f64::max)
}

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale must be finite and > 0, got {scale}")))
    }
}

fn sin_theta(x: &DataMatrix, d: usize, radius: ResolvedRadius, target: &Subspace) -> Result<f64> {
    let fit = fit_pc_subspace_with(x, d, radius)?;
    Ok(principal_angles(&fit.subspace, target)?.sin_largest)
}

fn radius_for(r: f64) -> ResolvedRadius {
    if r.is_finite() {
        ResolvedRadius::Radius(r)
    } else {
        ResolvedRadius::Identity
    }
}

/// Aggregates per-replication vectors (one entry per cell) into cell means.
fn aggregate(reps: &[Result<Vec<f64>>], cell: usize) -> Result<(f64, Option<f64>)> {
    let mut values = Vec::with_capacity(reps.len());
    for rep in reps {
        match rep {
            Ok(v) => values.push(v[cell]),
            Err(e) => return Err(e.clone()),
        }
    }
    Ok(mean_and_se(&values))
}

/// Configuration of the radius-effect experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEffectConfig {
    pub n: usize,
    pub p: usize,
    /// Variance of the first coordinate; the rest have variance 1.
    pub spike_variance: f64,
    pub distributions: Vec<Distribution>,
    pub epsilons: Vec<f64>,
    pub grid_points: usize,
    /// Grid runs from `grid_low · median norm` to `grid_high · max norm` of
    /// a pilot pure dataset drawn from the same distribution.
    pub grid_low: f64,
    pub grid_high: f64,
    /// Outlier value on coordinate 2, as a multiple of `n·p`.
    pub outlier_factor: f64,
    pub replications: usize,
    pub scale: f64,
    pub seed: u64,
}

impl RadiusEffectConfig {
    /// `n = 200·scale`, `p = 100`, `Σ = diag(100, 1, …, 1)`, `100·scale`
    /// replications.
    pub fn standard(scale: f64, seed: u64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self {
            n: scaled(200, scale),
            p: 100,
            spike_variance: 100.0,
            distributions: vec![Distribution::Gaussian, Distribution::StudentT { nu: 3.0 }],
            epsilons: vec![0.0, 0.05],
            grid_points: 30,
            grid_low: 0.05,
            grid_high: 2.0,
            outlier_factor: 100.0,
            replications: scaled(100, scale),
            scale,
            seed,
        })
    }

    fn model(&self, distribution: Distribution) -> Result<PopulationModel> {
        let mut diag = vec![1.0; self.p];
        diag[0] = self.spike_variance;
        match distribution {
            Distribution::Gaussian => PopulationModel::gaussian(diag),
            Distribution::StudentT { nu } => PopulationModel::student_t(diag, nu),
        }
    }

    /// Radius grid for distribution number `di`, the last entry `+∞`.
    pub fn radius_grid(&self, di: usize) -> Result<Vec<f64>> {
        let model = self.model(self.distributions[di])?;
        let pilot = sample_model(self.n, &model, &mut stream_rng(self.seed, cell_stream(1 << 20 | di as u64, 0)))?;
        let mut grid = log_grid(self.grid_low * median_norm(&pilot), self.grid_high * max_norm(&pilot), self.grid_points)?;
        grid.push(f64::INFINITY);
        Ok(grid)
    }

    pub fn run(&self) -> Result<ResultTable> {
        if self.p < 2 || self.n < 2 {
            return Err(Error::invalid("radius-effect experiment needs n, p >= 2"));
        }
        let mut table = ResultTable::new(Preset::Fig1.name(), &["distribution", "eps", "m", "r"]);
        table.stamp(self.seed, self.scale);
        table.add_metadata("n", self.n);
        table.add_metadata("p", self.p);
        table.add_metadata("d", 1);
        table.add_metadata("sigma", format!("diag({}, 1, ..., 1)", fmt_f64(self.spike_variance)));
        table.add_metadata("replications", self.replications);
        table.add_metadata(
            "outliers",
            format!("first m rows replaced by {}*n*p*e_2", fmt_f64(self.outlier_factor)),
        );
        table.add_metadata(
            "grid",
            format!(
                "{} log-spaced radii from {}*median to {}*max row norm of a pilot pure dataset per distribution, plus r=+inf (classical PCA)",
                self.grid_points,
                fmt_f64(self.grid_low),
                fmt_f64(self.grid_high)
            ),
        );
        table.add_metadata("target", "population subspace span(e_1)");
        let target = Subspace::coordinate(self.p, &[0])?;
        let ms: Vec<usize> = self.epsilons.iter().map(|e| (e * self.n as f64).round() as usize).collect();
        let magnitude = self.outlier_factor * (self.n * self.p) as f64;
        for (di, &dist) in self.distributions.iter().enumerate() {
            let model = self.model(dist)?;
            let grid = self.radius_grid(di)?;
            let per_rep: Vec<Result<Vec<f64>>> = (0..self.replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream_rng(self.seed, cell_stream(di as u64, rep as u64));
                    let x0 = sample_model(self.n, &model, &mut rng)?;
                    let mut out = Vec::with_capacity(ms.len() * grid.len());
                    for &m in &ms {
                        let plan = ContaminationPlan::first_m(m, OutlierRule::CoordinateSpike { index: 1, magnitude });
                        let x = apply_contamination(&x0, &plan)?;
                        for &r in &grid {
                            out.push(sin_theta(&x, 1, radius_for(r), &target)?);
                        }
                    }
                    Ok(out)
                })
                .collect();
            for (ei, (&eps, &m)) in self.epsilons.iter().zip(&ms).enumerate() {
                for (ri, &r) in grid.iter().enumerate() {
                    let params = vec![dist.label().into(), eps.into(), m.into(), r.into()];
                    match aggregate(&per_rep, ei * grid.len() + ri) {
                        Ok((mean, se)) => table.push(params, "sin_theta", Some(mean), se),
                        Err(e) => table.push_error(params, "sin_theta", &e),
                    }
                }
            }
        }
        Ok(table.finish())
    }
}

/// Radius-effect experiment with the standard configuration.
pub fn run_effect_of_radius(scale: f64, seed: u64) -> Result<ResultTable> {
    RadiusEffectConfig::standard(scale, seed)?.run()
}

/// Radius rule of the high-dimensional experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HighDimRadius {
    One,
    SqrtP,
    SqrtPLogP,
}

impl HighDimRadius {
    pub const ALL: [HighDimRadius; 3] = [HighDimRadius::One, HighDimRadius::SqrtP, HighDimRadius::SqrtPLogP];

    pub fn label(&self) -> &'static str {
        match self {
            HighDimRadius::One => "1",
            HighDimRadius::SqrtP => "sqrt(p)",
            HighDimRadius::SqrtPLogP => "sqrt(p*log(p))",
        }
    }

    pub fn value(&self, p: usize) -> f64 {
        let p = p as f64;
        match self {
            HighDimRadius::One => 1.0,
            HighDimRadius::SqrtP => p.sqrt(),
            HighDimRadius::SqrtPLogP => (p * p.ln()).sqrt(),
        }
    }
}

/// Configuration of the growing-dimension experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct HighDimConfig {
    /// `p_k = base_p · k`.
    pub base_p: usize,
    pub ks: Vec<usize>,
    /// Variances of the two leading coordinates before spiking.
    pub leading: [f64; 2],
    /// Variance of the remaining `p − 2` coordinates.
    pub filler: f64,
    pub distributions: Vec<Distribution>,
    pub outliers: usize,
    pub replications: usize,
    pub scale: f64,
    pub seed: u64,
}

impl HighDimConfig {
    /// `p_k = round(1000·scale)·k`, `n_k = 2k·p_k`, `k = 1..4`, 10 replications.
    pub fn standard(scale: f64, seed: u64) -> Result<Self> {
        check_scale(scale)?;
        if scale > 1.0 {
            return Err(Error::invalid(format!("high-dimensional scale must lie in (0, 1], got {scale}")));
        }
        Ok(Self {
            base_p: scaled(1000, scale).max(3),
            ks: vec![1, 2, 3, 4],
            leading: [4.0, 9.0],
            filler: 1.0,
            distributions: vec![Distribution::Gaussian, Distribution::StudentT { nu: 3.0 }],
            outliers: 2,
            replications: 10,
            scale,
            seed,
        })
    }

    pub fn dims(&self, k: usize) -> (usize, usize) {
        let p = self.base_p * k;
        (2 * k * p, p)
    }

    fn model(&self, p: usize, spiked: bool, distribution: Distribution) -> Result<PopulationModel> {
        let boost = if spiked { (p as f64).sqrt() } else { 1.0 };
        let mut diag = vec![self.filler; p];
        diag[0] = self.leading[0] * boost;
        diag[1] = self.leading[1] * boost;
        match distribution {
            Distribution::Gaussian => PopulationModel::gaussian(diag),
            Distribution::StudentT { nu } => PopulationModel::student_t(diag, nu),
        }
    }

    pub fn run(&self) -> Result<ResultTable> {
        let mut table = ResultTable::new(Preset::Fig2.name(), &["model", "distribution", "k", "p", "n", "radius", "r"]);
        table.stamp(self.seed, self.scale);
        table.add_metadata(
            "sigma",
            format!(
                "non-spiked diag({}, {}, {}, ...); spiked diag({}*sqrt(p), {}*sqrt(p), {}, ...)",
                fmt_f64(self.leading[0]),
                fmt_f64(self.leading[1]),
                fmt_f64(self.filler),
                fmt_f64(self.leading[0]),
                fmt_f64(self.leading[1]),
                fmt_f64(self.filler)
            ),
        );
        table.add_metadata("filler_eigenvalue", fmt_f64(self.filler));
        table.add_metadata("d", 2);
        table.add_metadata("replications", self.replications);
        table.add_metadata("outliers", format!("first {} rows replaced by n*p*e_3", self.outliers));
        table.add_metadata(
            "grid",
            format!("k in {:?}, p_k = {}*k, n_k = 2*k*p_k, radii 1, sqrt(p), sqrt(p*log(p))", self.ks, self.base_p),
        );
        table.add_metadata("target", "population subspace span(e_1, e_2)");

        let mut jobs = Vec::new();
        for (ki, &k) in self.ks.iter().enumerate() {
            for (si, spiked) in [false, true].into_iter().enumerate() {
                for (di, &dist) in self.distributions.iter().enumerate() {
                    jobs.push((ki, k, si, spiked, di, dist));
                }
            }
        }
        for (ki, k, si, spiked, di, dist) in jobs {
            let (n, p) = self.dims(k);
            let label = if spiked { "spiked" } else { "non-spiked" };
            let params = |h: HighDimRadius| -> Vec<Param> {
                vec![label.into(), dist.label().into(), k.into(), p.into(), n.into(), h.label().into(), h.value(p).into()]
            };
            let cell = ((ki * 2 + si) * self.distributions.len() + di) as u64;
            let per_rep: Vec<Result<Vec<f64>>> = match self.model(p, spiked, dist) {
                Err(e) => vec![Err(e)],
                Ok(model) => {
                    let target = Subspace::coordinate(p, &[0, 1])?;
                    (0..self.replications)
                        .into_par_iter()
                        .map(|rep| {
                            let mut rng = stream_rng(self.seed, cell_stream(cell, rep as u64));
                            let x0 = sample_model(n, &model, &mut rng)?;
                            let magnitude = (n * p) as f64;
                            let plan = ContaminationPlan::first_m(self.outliers, OutlierRule::CoordinateSpike { index: 2, magnitude });
                            let x = apply_contamination(&x0, &plan)?;
                            drop(x0);
                            HighDimRadius::ALL
                                .iter()
                                .map(|h| sin_theta(&x, 2, ResolvedRadius::Radius(h.value(p)), &target))
                                .collect()
                        })
                        .collect()
                }
            };
            for (hi, h) in HighDimRadius::ALL.iter().enumerate() {
                match aggregate(&per_rep, hi) {
                    Ok((mean, se)) => table.push(params(*h), "sin_theta", Some(mean), se),
                    Err(e) => table.push_error(params(*h), "sin_theta", &e),
                }
            }
        }
        Ok(table.finish())
    }
}

/// Growing-dimension experiment with the standard configuration.
pub fn run_high_dim(scale: f64, seed: u64) -> Result<ResultTable> {
    HighDimConfig::standard(scale, seed)?.run()
}

/// Configuration of the breakdown-lower-bound experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownConfig {
    pub n: usize,
    pub sigma: Vec<f64>,
    pub d: usize,
    pub grid_points: usize,
    /// Grid runs from `grid_low · median norm` to `grid_high · max norm` of
    /// a pilot dataset.
    pub grid_low: f64,
    pub grid_high: f64,
    pub replications: usize,
    pub scale: f64,
    pub seed: u64,
}

impl BreakdownConfig {
    /// `n = 1000`, `Σ = diag(25, 25, 5, 1)`, `d = 2`, `1000·scale`
    /// replications on a 40-point grid.
    pub fn standard(scale: f64, seed: u64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self {
            n: 1000,
            sigma: vec![25.0, 25.0, 5.0, 1.0],
            d: 2,
            grid_points: 40,
            grid_low: 0.1,
            grid_high: 3.0,
            replications: scaled(1000, scale),
            scale,
            seed,
        })
    }

    pub fn radius_grid(&self) -> Result<Vec<f64>> {
        let model = PopulationModel::gaussian(self.sigma.clone())?;
        let pilot = sample_model(self.n, &model, &mut stream_rng(self.seed, cell_stream(1 << 20, 0)))?;
        log_grid(self.grid_low * median_norm(&pilot), self.grid_high * max_norm(&pilot), self.grid_points)
    }

    pub fn run(&self) -> Result<ResultTable> {
        let model = PopulationModel::gaussian(self.sigma.clone())?;
        let grid = self.radius_grid()?;
        let mut table = ResultTable::new(Preset::Fig3.name(), &["r"]);
        table.stamp(self.seed, self.scale);
        table.add_metadata("n", self.n);
        table.add_metadata("sigma", format!("diag({})", self.sigma.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")));
        table.add_metadata("d", self.d);
        table.add_metadata("replications", self.replications);
        table.add_metadata(
            "grid",
            format!(
                "{} log-spaced radii from {}*median to {}*max row norm of a pilot dataset",
                self.grid_points,
                fmt_f64(self.grid_low),
                fmt_f64(self.grid_high)
            ),
        );
        let per_rep: Vec<Result<Vec<f64>>> = (0..self.replications)
            .into_par_iter()
            .map(|rep| {
                let x0 = sample_model(self.n, &model, &mut stream_rng(self.seed, cell_stream(0, rep as u64)))?;
                let mut out = Vec::with_capacity(2 * grid.len());
                for &r in &grid {
                    let fit = fit_pc_subspace_with(&x0, self.d, ResolvedRadius::Radius(r))?;
                    let b = wpca_breakdown_lower_bounds(&WinsorizedSpectrum::from_sample(&fit.spectrum, r)?, self.d)?;
                    out.push(b.weak);
                    out.push(b.strong);
                }
                Ok(out)
            })
            .collect();
        for (ri, &r) in grid.iter().enumerate() {
            for (si, stat) in ["weak_lb", "strong_lb"].into_iter().enumerate() {
                match aggregate(&per_rep, 2 * ri + si) {
                    Ok((mean, se)) => table.push(vec![r.into()], stat, Some(mean), se),
                    Err(e) => table.push_error(vec![r.into()], stat, &e),
                }
            }
        }
        Ok(table.finish())
    }
}

/// Breakdown-lower-bound experiment with the standard configuration.
pub fn run_breakdown_bounds(seed: u64) -> Result<ResultTable> {
    BreakdownConfig::standard(1.0, seed)?.run()
}

/// Configuration of the contamination sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub n: usize,
    pub sigma: Vec<f64>,
    /// Outliers sit at `(max_i ‖x_i‖² + offset)·e_2`.
    pub offset: f64,
    /// Largest number of replaced rows; defaults to `n/2 − 1`.
    pub max_m: usize,
    pub seed: u64,
}

impl PerturbationConfig {
    /// `n = 1000`, `Σ = diag(25, 1)`, `m = 0, …, n/2 − 1`.
    pub fn standard(seed: u64) -> Self {
        Self {
            n: 1000,
            sigma: vec![25.0, 1.0],
            offset: 100.0,
            max_m: 499,
            seed,
        }
    }

    pub fn run(&self) -> Result<ResultTable> {
        let d = 1;
        let model = PopulationModel::gaussian(self.sigma.clone())?;
        if self.max_m >= self.n {
            return Err(Error::invalid("max_m must be below n"));
        }
        let x0 = sample_model(self.n, &model, &mut stream_rng(self.seed, 0))?;
        let radius = resolve_radius(&x0, RadiusSpec::MedianNorm)?;
        let r = radius.radius().expect("median radius is finite");
        let pure = fit_pc_subspace_with(&x0, d, radius)?;
        let wspec = WinsorizedSpectrum::from_sample(&pure.spectrum, r)?;
        let weak = wpca_breakdown_lower_bounds(&wspec, d)?.weak;
        let gap = wspec.gap(d);

        let mut table = ResultTable::new(Preset::Fig4.name(), &["m", "eps"]);
        table.stamp(self.seed, 1.0);
        table.add_metadata("n", self.n);
        table.add_metadata("sigma", format!("diag({})", self.sigma.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")));
        table.add_metadata("d", d);
        table.add_metadata("r", format!("{} (median row norm of the pure data)", fmt_f64(r)));
        table.add_metadata("outliers", format!("first m rows replaced by (max ||x_i||^2 + {})*e_2", fmt_f64(self.offset)));
        table.add_metadata("grid", format!("m = 0..={}", self.max_m));
        table.add_metadata("replications", "1 (single pure dataset)");

        let rows: Vec<(usize, Result<(f64, f64)>)> = (0..=self.max_m)
            .into_par_iter()
            .map(|m| {
                let plan = ContaminationPlan::first_m(m, OutlierRule::MaxSquaredNormSpike { index: 1, offset: self.offset });
                let angle = apply_contamination(&x0, &plan)
                    .and_then(|x| fit_pc_subspace_with(&x, d, radius))
                    .and_then(|fit| principal_angles(&fit.subspace, &pure.subspace))
                    .map(|a| (a.largest, a.sin_largest));
                (m, angle)
            })
            .collect();
        for (m, angle) in rows {
            let eps = m as f64 / self.n as f64;
            let params = || vec![Param::from(m), Param::from(eps)];
            match angle {
                Ok((theta, sin)) => {
                    table.push(params(), "angle", Some(theta), None);
                    table.push(params(), "sin_angle", Some(sin), None);
                }
                Err(e) => {
                    table.push_error(params(), "angle", &e);
                    table.push_error(params(), "sin_angle", &e);
                }
            }
            match perturbation_bound(pure.spectrum.value(d), pure.spectrum.value(d + 1), r, eps) {
                Ok(rep) => {
                    table.push(params(), "bound1", rep.component("bound1"), None);
                    table.push(params(), "bound2", rep.component("bound2"), None);
                }
                Err(e) => {
                    table.push_error(params(), "bound1", &e);
                    table.push_error(params(), "bound2", &e);
                }
            }
            table.push(params(), "weak_lb", Some(weak), None);
            table.push(params(), "gap", Some(gap), None);
        }
        Ok(table.finish())
    }
}

/// Contamination sweep with the standard configuration.
pub fn run_perturbation_sweep(seed: u64) -> Result<ResultTable> {
    PerturbationConfig::standard(seed).run()
}
