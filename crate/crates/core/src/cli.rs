//! Command-line front end.
//!
//! Every command produces one or more [`Table`]s. CSV output starts with a
//! `#`-prefixed JSON metadata line followed by a header row; JSON output is
//! an object `{metadata, columns, records}` carrying the same data.
//! Settings resolve as flags, then the config file, then built-in defaults.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::implied::{self, StrikeGrid};
use crate::pricing::{self, Pricer, TotalVol};
use crate::shape::{self, ShapeReport};
use crate::specialfn::Accuracy;
use crate::vgmodel::{MixtureModel, MixtureParams};

/// Volatility parameters drawn in the published figures.
pub const FIGURE_VS: [f64; 4] = [0.0, 0.01, 0.015, 0.02];

const COLUMNS_HELP: &str = "\
Output columns:
  price        K, call, put
  smile        K, log_moneyness, sigma (total implied volatility)
  density      x, f_v, f_0 [, empirical]
  classify     classification, sigma_star, sigma_star_lo, sigma_star_hi, sign_sequence, n_vol,
               geometric_symmetry_pass, symmetry_max_deviation, r_star, dip_at_zero_pass,
               density_at_zero, normal_at_zero, atm_vol, window, points
  convergence  v, sup_norm, argmax_x
  figures      fig1_densities: x, f_v0, f_v0.01, f_v0.015, f_v0.02
               fig2_double_gamma_vs_normal: x, double_gamma, normal, log_abs_diff
               fig3_smiles: K, log_moneyness, sigma_v0, sigma_v0.01, sigma_v0.015, sigma_v0.02

Exit codes: 0 success, 2 invalid input, 3 numerical failure.";

#[derive(Parser, Debug)]
#[command(name = "vgsmile", version, about = "Variance-gamma mixture prices, smiles and smile shapes", after_help = COLUMNS_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalOpts {
    /// Brownian volatility of both components
    #[arg(long, global = true)]
    pub v: Option<f64>,
    /// Gamma shape per unit time
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Horizon in years
    #[arg(long = "T", global = true)]
    pub t: Option<f64>,
    /// Spot
    #[arg(long = "S0", global = true)]
    pub s0: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Half-width of the strike window in log-moneyness
    #[arg(long, global = true)]
    pub log_moneyness_window: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; a directory for `figures`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with keys named like the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Call and put prices per strike
    Price {
        /// Comma-separated strikes; defaults to the strike grid
        #[arg(long, value_delimiter = ',')]
        strikes: Vec<f64>,
    },
    /// Implied total volatility over the strike grid
    Smile,
    /// Mixture density and its double-gamma limit
    Density {
        #[arg(long, default_value_t = -0.2, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        x_max: f64,
        /// Adds a histogram column from this many seeded draws
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
    },
    /// Classify the smile as W, W_PLUS or NOT_W
    Classify,
    /// Sup-norm distance of f_v to the double gamma
    Convergence {
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.015, 0.01, 0.005])]
        v_list: Vec<f64>,
        #[arg(long, default_value_t = 0.2)]
        x_window: f64,
        /// Also bisect in v for the largest W-shaped smile
        #[arg(long)]
        shape_boundary: bool,
    },
    /// Data behind the density, crossing and smile figures
    Figures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    v: Option<f64>,
    c: Option<f64>,
    lambda: Option<f64>,
    mu: Option<f64>,
    #[serde(rename = "T")]
    t: Option<f64>,
    #[serde(rename = "S0")]
    s0: Option<f64>,
    grid_points: Option<usize>,
    log_moneyness_window: Option<f64>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: MixtureParams,
    pub grid_points: usize,
    pub log_moneyness_window: f64,
    pub accuracy: Accuracy,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: MixtureParams::figure(0.0),
            grid_points: StrikeGrid::DEFAULT_POINTS,
            log_moneyness_window: StrikeGrid::DEFAULT_WINDOW,
            accuracy: Accuracy::default(),
            format: OutputFormat::Csv,
            out: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Layer flags over the config file over the defaults, then validate.
    pub fn resolve(opts: &GlobalOpts) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io("config", path, e))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let d = Self::default();
        let params = MixtureParams {
            v: opts.v.or(file.v).unwrap_or(d.params.v),
            c: opts.c.or(file.c).unwrap_or(d.params.c),
            lambda: opts.lambda.or(file.lambda).unwrap_or(d.params.lambda),
            mu: opts.mu.or(file.mu).unwrap_or(d.params.mu),
            t: opts.t.or(file.t).unwrap_or(d.params.t),
            s0: opts.s0.or(file.s0).unwrap_or(d.params.s0),
        };
        params
            .validate()
            .map_err(|e| CliError::from_lib("config", e))?;
        let accuracy = Accuracy {
            rel_tol: opts.rel_tol.or(file.rel_tol).unwrap_or(d.accuracy.rel_tol),
            abs_tol: opts.abs_tol.or(file.abs_tol).unwrap_or(d.accuracy.abs_tol),
            ..d.accuracy
        };
        accuracy
            .validate()
            .map_err(|e| CliError::from_lib("config", e))?;
        let cfg = Self {
            params,
            grid_points: opts.grid_points.or(file.grid_points).unwrap_or(d.grid_points),
            log_moneyness_window: opts
                .log_moneyness_window
                .or(file.log_moneyness_window)
                .unwrap_or(d.log_moneyness_window),
            accuracy,
            format: opts.format.or(file.format).unwrap_or(d.format),
            out: opts.out.clone().or(file.out),
            seed: opts.seed.or(file.seed).unwrap_or(d.seed),
        };
        cfg.grid().map_err(|e| CliError::from_lib("config", e))?;
        Ok(cfg)
    }

    pub fn grid(&self) -> crate::error::Result<StrikeGrid> {
        StrikeGrid::symmetric(self.params.s0, self.log_moneyness_window, self.grid_points)
    }

    fn model(&self, params: MixtureParams) -> crate::error::Result<MixtureModel> {
        MixtureModel::with_accuracy(params, self.accuracy)
    }

    fn pricer(&self, params: MixtureParams) -> crate::error::Result<Pricer> {
        Pricer::new(self.model(params)?)
    }

    fn metadata(&self, command: &str, table: &str) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(command));
        m.insert("table".into(), json!(table));
        m.insert("params".into(), serde_json::to_value(self.params).expect("plain data"));
        m.insert("accuracy".into(), serde_json::to_value(self.accuracy).expect("plain data"));
        m.insert("grid_points".into(), json!(self.grid_points));
        m.insert("log_moneyness_window".into(), json!(self.log_moneyness_window));
        m.insert("seed".into(), json!(self.seed));
        m
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // non-finite numbers become null
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem used when a command writes several tables.
    pub name: String,
    pub metadata: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, metadata: Map<String, Value>, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            metadata,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let meta = serde_json::to_string(&self.metadata).expect("serializable metadata");
        let _ = writeln!(out, "# {meta}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let rec: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(rec)
            })
            .collect();
        let doc = json!({
            "metadata": self.metadata,
            "columns": self.columns,
            "records": records,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable table");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

/// Failure of a command, reported as a JSON record on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub operation: String,
    pub message: String,
}

impl CliError {
    fn validation(operation: &str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            operation: operation.to_string(),
            message: message.into(),
        }
    }

    fn io(operation: &str, path: &Path, e: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            operation: operation.to_string(),
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn from_lib(command: &str, e: Error) -> Self {
        let operation = match &e {
            Error::Convergence { func, .. } | Error::Domain { func, .. } => format!("{command}/{func}"),
            Error::Bracket { .. } => format!("{command}/implied_vol"),
            _ => command.to_string(),
        };
        Self {
            kind: if e.is_numerical() {
                ErrorKind::Numerical
            } else {
                ErrorKind::Validation
            },
            operation,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 1,
        }
    }

    pub fn record(&self) -> String {
        json!({ "error": self, "exit_code": self.exit_code() }).to_string()
    }
}

type CmdResult<T> = crate::error::Result<T>;

pub fn cmd_price(cfg: &RunConfig, strikes: Option<&[f64]>) -> CmdResult<Table> {
    let pricer = cfg.pricer(cfg.params)?;
    let strikes = match strikes {
        Some(ks) if !ks.is_empty() => ks.to_vec(),
        _ => cfg.grid()?.strikes(),
    };
    let quotes = pricer.quotes(&strikes)?;
    let mut t = Table::new("price", cfg.metadata("price", "price"), &["K", "call", "put"]);
    t.rows = quotes
        .iter()
        .map(|q| vec![q.strike.into(), q.call.into(), q.put.into()])
        .collect();
    Ok(t)
}

pub fn cmd_smile(cfg: &RunConfig) -> CmdResult<Table> {
    let pricer = cfg.pricer(cfg.params)?;
    let curve = implied::smile_for_strikes(&pricer, &cfg.grid()?.strikes())?;
    let mut meta = cfg.metadata("smile", "smile");
    meta.insert("gaps".into(), json!(curve.gaps));
    let mut t = Table::new("smile", meta, &["K", "log_moneyness", "sigma"]);
    t.rows = curve
        .strikes
        .iter()
        .zip(curve.log_moneyness())
        .zip(&curve.vols)
        .map(|((&k, x), &s)| vec![k.into(), x.into(), s.into()])
        .collect();
    Ok(t)
}

/// Evenly spaced points; exactly antisymmetric when `lo = −hi`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let m = (n.max(2) - 1) as f64;
    if lo == -hi {
        let n = n.max(2);
        let half = (n - 1) as i64;
        return (0..n as i64).map(|i| hi * (2 * i - half) as f64 / m).collect();
    }
    (0..n.max(2)).map(|i| lo + (hi - lo) * i as f64 / m).collect()
}

/// Density value with singular points shown as `inf` and jumps as `NaN`.
fn shown_density(r: crate::error::Result<f64>) -> CmdResult<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Singularity { .. }) => Ok(f64::INFINITY),
        Err(Error::Discontinuity { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

pub fn cmd_density(cfg: &RunConfig, x_min: f64, x_max: f64, mc_samples: usize) -> CmdResult<Table> {
    if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::Validation(format!("x range [{x_min}, {x_max}] is empty")));
    }
    let model = cfg.model(cfg.params)?;
    let xs = linspace(x_min, x_max, cfg.grid_points);
    let mut columns = vec!["x", "f_v", "f_0"];
    let hist = if mc_samples > 0 {
        columns.push("empirical");
        let draws = model.sample(mc_samples, cfg.seed)?;
        let h = (x_max - x_min) / (xs.len() - 1) as f64;
        let mut counts = vec![0u64; xs.len()];
        for d in draws {
            let j = ((d - x_min) / h + 0.5).floor();
            if j >= 0.0 && (j as usize) < counts.len() {
                counts[j as usize] += 1;
            }
        }
        Some(counts.into_iter().map(|c| c as f64 / (mc_samples as f64 * h)).collect::<Vec<_>>())
    } else {
        None
    };
    let mut t = Table::new("density", cfg.metadata("density", "density"), &columns);
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![
            x.into(),
            shown_density(model.density(x))?.into(),
            shown_density(model.double_gamma_density(x))?.into(),
        ];
        if let Some(h) = &hist {
            row.push(h[i].into());
        }
        t.rows.push(row);
    }
    Ok(t)
}

pub fn cmd_classify(cfg: &RunConfig) -> CmdResult<(Table, ShapeReport)> {
    let report = shape::classify_params(&cfg.params, &cfg.grid()?)?;
    let mut meta = cfg.metadata("classify", "classify");
    meta.insert("diagnostics".into(), json!(report.diagnostics));
    let columns = [
        "classification",
        "sigma_star",
        "sigma_star_lo",
        "sigma_star_hi",
        "sign_sequence",
        "n_vol",
        "geometric_symmetry_pass",
        "symmetry_max_deviation",
        "r_star",
        "dip_at_zero_pass",
        "density_at_zero",
        "normal_at_zero",
        "atm_vol",
        "window",
        "points",
    ];
    let mut t = Table::new("classify", meta, &columns);
    let c = &report.conditions;
    let (lo, hi) = report.sigma_star_interval.unwrap_or((f64::NAN, f64::NAN));
    t.rows.push(vec![
        Cell::Text(report.classification.to_string()),
        report.sigma_star.unwrap_or(f64::NAN).into(),
        lo.into(),
        hi.into(),
        Cell::Text(report.sign_sequence.clone()),
        Cell::Int(report.n_vol as u64),
        Cell::Bool(c.geometric_symmetry.pass),
        c.geometric_symmetry.max_deviation.into(),
        c.semi_heavy_tails.r_star.into(),
        Cell::Bool(c.dip_at_zero.pass),
        c.dip_at_zero.density_at_zero.into(),
        c.dip_at_zero.normal_at_zero.into(),
        c.dip_at_zero.atm_vol.into(),
        report.window.into(),
        Cell::Int(report.points as u64),
    ]);
    Ok((t, report))
}

/// Sup-norm of `f_v − f_0` on a grid over `[−x_window, x_window]` and its
/// location.
pub fn sup_distance(cfg: &RunConfig, v: f64, x_window: f64) -> CmdResult<(f64, f64)> {
    let model = cfg.model(cfg.params.with_v(v))?;
    let xs = linspace(-x_window, x_window, cfg.grid_points.max(4001));
    let mut best = (0.0, 0.0);
    for x in xs {
        let d = (shown_density(model.density(x))? - shown_density(model.double_gamma_density(x))?).abs();
        if d.is_finite() && d > best.0 {
            best = (d, x);
        }
    }
    Ok(best)
}

pub fn cmd_convergence(cfg: &RunConfig, v_list: &[f64], x_window: f64, boundary: bool) -> CmdResult<Table> {
    if !(x_window > 0.0) {
        return Err(Error::Validation(format!("x window {x_window} must be > 0")));
    }
    let rows: Vec<(f64, (f64, f64))> = v_list
        .par_iter()
        .map(|&v| Ok((v, sup_distance(cfg, v, x_window)?)))
        .collect::<CmdResult<_>>()?;
    let mut meta = cfg.metadata("convergence", "convergence");
    meta.insert("x_window".into(), json!(x_window));
    if boundary {
        let v_max = v_list.iter().copied().fold(0.0, f64::max);
        let b = shape::shape_boundary(&cfg.params, &cfg.grid()?, 0.0, v_max, 12)?;
        meta.insert(
            "empirical_shape_boundary".into(),
            json!({ "last_w": b.0, "first_not_w": b.1, "note": "numerical bisection on the sampled grid" }),
        );
    }
    let mut t = Table::new("convergence", meta, &["v", "sup_norm", "argmax_x"]);
    t.rows = rows
        .into_iter()
        .map(|(v, (d, x))| vec![v.into(), d.into(), x.into()])
        .collect();
    Ok(t)
}

fn v_label(v: f64) -> String {
    format!("v{v}")
}

/// Tables behind the three figures, for the caption parameters with the
/// configured `(c, λ, μ, T, S0)`.
pub fn cmd_figures(cfg: &RunConfig) -> CmdResult<Vec<Table>> {
    let models: Vec<MixtureModel> = FIGURE_VS
        .iter()
        .map(|&v| cfg.model(cfg.params.with_v(v)))
        .collect::<CmdResult<_>>()?;

    let xs = linspace(-0.2, 0.2, cfg.grid_points.max(401));
    let mut cols = vec!["x".to_string()];
    cols.extend(FIGURE_VS.iter().map(|&v| format!("f_{}", v_label(v))));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut meta = cfg.metadata("figures", "fig1_densities");
    meta.insert("v_values".into(), json!(FIGURE_VS));
    let mut fig1 = Table::new("fig1_densities", meta, &col_refs);
    for &x in &xs {
        let mut row = vec![Cell::Num(x)];
        for m in &models {
            row.push(shown_density(m.density(x))?.into());
        }
        fig1.rows.push(row);
    }

    let grid = cfg.grid()?;
    let reports: Vec<(ShapeReport, implied::SmileCurve)> = models
        .par_iter()
        .map(|m| {
            let pricer = Pricer::new(*m)?;
            let curve = implied::smile_for_strikes(&pricer, &grid.strikes())?;
            let report = shape::classify(&curve, m.params())?;
            Ok((report, curve))
        })
        .collect::<CmdResult<_>>()?;

    // normal density at the W level of the double-gamma smile
    let zero = &models[0];
    let sigma_star = match reports[0].0.sigma_star {
        Some(s) => TotalVol::new(s)?,
        None => implied::atm_vol(&Pricer::new(*zero)?)?,
    };
    let crossings = shape::density_crossings(zero, sigma_star, &shape::crossing_grid(zero, sigma_star, 8001))?;
    let mut meta = cfg.metadata("figures", "fig2_double_gamma_vs_normal");
    meta.insert("sigma_star".into(), json!(sigma_star.value()));
    meta.insert("n_pdf".into(), json!(crossings.n_pdf));
    meta.insert("crossing_xs".into(), json!(crossings.crossing_xs));
    let mut fig2 = Table::new(
        "fig2_double_gamma_vs_normal",
        meta,
        &["x", "double_gamma", "normal", "log_abs_diff"],
    );
    for &x in &linspace(-0.5, 0.5, cfg.grid_points.max(1001)) {
        let f = shown_density(zero.double_gamma_density(x))?;
        let phi = pricing::bs_log_density(x, sigma_star);
        fig2.rows.push(vec![x.into(), f.into(), phi.into(), (f - phi).abs().ln().into()]);
    }

    let mut cols = vec!["K".to_string(), "log_moneyness".to_string()];
    cols.extend(FIGURE_VS.iter().map(|&v| format!("sigma_{}", v_label(v))));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut meta = cfg.metadata("figures", "fig3_smiles");
    let classes: Map<String, Value> = FIGURE_VS
        .iter()
        .zip(&reports)
        .map(|(&v, (r, _))| {
            (
                v_label(v),
                json!({
                    "classification": r.classification,
                    "sigma_star": r.sigma_star,
                    "sign_sequence": r.sign_sequence,
                    "dip_at_zero_pass": r.conditions.dip_at_zero.pass,
                }),
            )
        })
        .collect();
    meta.insert("classification".into(), Value::Object(classes));
    let mut fig3 = Table::new("fig3_smiles", meta, &col_refs);
    for (k, x) in grid.strikes().into_iter().zip(grid.log_moneyness.iter()) {
        let mut row = vec![Cell::Num(k), Cell::Num(*x)];
        for (_, curve) in &reports {
            let vol = curve
                .strikes
                .iter()
                .position(|&s| s == k)
                .map_or(f64::NAN, |j| curve.vols[j]);
            row.push(vol.into());
        }
        fig3.rows.push(row);
    }

    Ok(vec![fig1, fig2, fig3])
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io("write", p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn lib(name: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::from_lib(name, e)
}

/// Run one parsed command.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    match &cli.command {
        Command::Price { strikes } => {
            let t = cmd_price(&cfg, Some(strikes)).map_err(lib("price"))?;
            write_output(cfg.out.as_deref(), &t.render(cfg.format))
        }
        Command::Smile => {
            let t = cmd_smile(&cfg).map_err(lib("smile"))?;
            write_output(cfg.out.as_deref(), &t.render(cfg.format))
        }
        Command::Density {
            x_min,
            x_max,
            mc_samples,
        } => {
            let t = cmd_density(&cfg, *x_min, *x_max, *mc_samples).map_err(lib("density"))?;
            write_output(cfg.out.as_deref(), &t.render(cfg.format))
        }
        Command::Classify => {
            let (t, report) = cmd_classify(&cfg).map_err(lib("classify"))?;
            let text = match cfg.format {
                OutputFormat::Csv => t.to_csv(),
                OutputFormat::Json => {
                    let doc = json!({ "metadata": t.metadata, "records": [report] });
                    let mut s = serde_json::to_string_pretty(&doc).expect("serializable report");
                    s.push('\n');
                    s
                }
            };
            write_output(cfg.out.as_deref(), &text)
        }
        Command::Convergence {
            v_list,
            x_window,
            shape_boundary,
        } => {
            let t = cmd_convergence(&cfg, v_list, *x_window, *shape_boundary).map_err(lib("convergence"))?;
            write_output(cfg.out.as_deref(), &t.render(cfg.format))
        }
        Command::Figures => {
            let tables = cmd_figures(&cfg).map_err(lib("figures"))?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            fs::create_dir_all(&dir).map_err(|e| CliError::io("figures", &dir, e))?;
            for t in &tables {
                let path = dir.join(format!("{}.{}", t.name, cfg.format.extension()));
                write_output(Some(&path), &t.render(cfg.format))?;
            }
            Ok(())
        }
    }
}

/// Parse arguments and run; the return value is the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::validation("arguments", e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
