//! Strike and maturity sweeps comparing the approximations with the reference
//! pricer, convergence-order fits, and CSV output.

mod params;

pub use params::{Family, ParameterSet};

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::approx::{approx_v1, approx_v2, approx_v3, bs_price, Formula, Regime};
use crate::error::{domain, Error, Result};
use crate::model::MarketState;
use crate::reference::{reference_price, Method};

/// Maturity of the strike sweeps.
pub const SWEEP_MATURITY: f64 = 0.0833;
/// Maturity range of the maturity sweeps.
pub const MATURITY_RANGE: (f64, f64) = (0.01, 0.4);
/// Maturity range of the convergence fits.
pub const CONVERGENCE_RANGE: (f64, f64) = (0.005, 0.1);
/// Fewest points accepted by a convergence fit.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `|V2 - V|` against ITM strikes up to the money.
    ItmGap,
    /// Relative errors against strike across the near-the-money range.
    StrikeSweep,
    /// Relative errors against maturity at the money.
    AtmMaturity,
    /// Relative errors against maturity at a fixed ITM strike.
    ItmMaturity,
}

impl Figure {
    pub fn number(&self) -> u8 {
        match self {
            Figure::ItmGap => 1,
            Figure::StrikeSweep => 2,
            Figure::AtmMaturity => 3,
            Figure::ItmMaturity => 4,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Figure::ItmGap),
            2 => Ok(Figure::StrikeSweep),
            3 => Ok(Figure::AtmMaturity),
            4 => Ok(Figure::ItmMaturity),
            _ => Err(Error::Config(format!("no figure {n}"))),
        }
    }

    fn sweeps_strike(&self) -> bool {
        matches!(self, Figure::ItmGap | Figure::StrikeSweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Grid points per sweep.
    pub points: usize,
    /// Seed for any Monte Carlo fallback.
    pub seed: u64,
    /// Absolute reference tolerance; `None` means `1e-5 S0`.
    pub tol: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { points: 50, seed: 1, tol: None }
    }
}

impl ExperimentConfig {
    fn tolerance(&self, set: &ParameterSet) -> f64 {
        self.tol.unwrap_or(1e-5 * set.s_t)
    }
}

/// One grid point of a sweep. Errors are relative to the reference price,
/// except `abs_err_v2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    /// Strike or maturity, depending on the sweep.
    pub sweep_variable: f64,
    pub strike: f64,
    pub maturity: f64,
    pub reference_price: f64,
    pub reference_error: f64,
    pub reference_method: Method,
    pub bs_only: f64,
    pub v1: f64,
    /// Absent when `Z0 <= 0`.
    pub v2: Option<f64>,
    pub v3: f64,
    pub rel_err_bs: f64,
    pub rel_err_v1: f64,
    pub rel_err_v3: f64,
    pub abs_err_v2: Option<f64>,
    pub regime: Regime,
}

fn rel_err(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference
}

/// Evaluates every pricer at `t = 0` for one `(K, T)`.
pub fn evaluate_point(
    set: &ParameterSet,
    strike: f64,
    maturity: f64,
    tol: f64,
    seed: u64,
) -> Result<ExperimentRow> {
    let params = set.params(maturity)?;
    let state = MarketState::initial(&params, strike)?;
    let reference = reference_price(&params, &state, tol, seed)?;
    let bs = bs_price(&params, &state)?;
    let v1 = approx_v1(&params, &state)?.price;
    let v2 = match approx_v2(&params, &state) {
        Ok(r) => Some(r.price),
        Err(Error::Regime { .. }) => None,
        Err(e) => return Err(e),
    };
    let v3 = approx_v3(&params, &state)?.price;
    let v = reference.price;
    Ok(ExperimentRow {
        sweep_variable: f64::NAN,
        strike,
        maturity,
        reference_price: v,
        reference_error: reference.error,
        reference_method: reference.method,
        bs_only: bs,
        v1,
        v2,
        v3,
        rel_err_bs: rel_err(bs, v),
        rel_err_v1: rel_err(v1, v),
        rel_err_v3: rel_err(v3, v),
        abs_err_v2: v2.map(|p| (p - v).abs()),
        regime: Regime::of(&state),
    })
}

/// `n` evenly spaced points from `lo`; includes `hi` unless `half_open`.
pub fn linear_grid(lo: f64, hi: f64, n: usize, half_open: bool) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let steps = if half_open { n } else { n - 1 } as f64;
            let mut g: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / steps).collect();
            if !half_open {
                g[n - 1] = hi;
            }
            g
        }
    }
}

/// `n >= 2` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// Sweep points as `(strike, maturity)` pairs.
pub fn figure_grid(figure: Figure, set: &ParameterSet, points: usize) -> Vec<(f64, f64)> {
    let (t_lo, t_hi) = MATURITY_RANGE;
    match figure {
        Figure::ItmGap => linear_grid(set.sweep_low_strike(), set.s_t, points, false)
            .into_iter()
            .map(|k| (k, SWEEP_MATURITY))
            .collect(),
        // The upper end is the deep OTM boundary, where the corrections vanish
        // and every formula collapses onto Black-Scholes.
        Figure::StrikeSweep => linear_grid(set.sweep_low_strike(), set.otm_boundary(), points, true)
            .into_iter()
            .map(|k| (k, SWEEP_MATURITY))
            .collect(),
        Figure::AtmMaturity => {
            linear_grid(t_lo, t_hi, points, false).into_iter().map(|t| (set.s_t, t)).collect()
        }
        Figure::ItmMaturity => {
            let k = set.itm_strike();
            linear_grid(t_lo, t_hi, points, false).into_iter().map(|t| (k, t)).collect()
        }
    }
}

/// Evaluates a figure's sweep in parallel; rows come back in grid order.
pub fn run_figure(figure: Figure, set: &ParameterSet, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if cfg.points == 0 {
        return domain("a sweep needs at least one point");
    }
    let tol = cfg.tolerance(set);
    figure_grid(figure, set, cfg.points)
        .par_iter()
        .map(|&(k, t)| {
            let mut row = evaluate_point(set, k, t, tol, cfg.seed)?;
            row.sweep_variable = if figure.sweeps_strike() { k } else { t };
            Ok(row)
        })
        .collect()
}

pub fn run_fig1(set: &ParameterSet, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    run_figure(Figure::ItmGap, set, cfg)
}

pub fn run_fig2(set: &ParameterSet, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    run_figure(Figure::StrikeSweep, set, cfg)
}

pub fn run_fig3(set: &ParameterSet, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    run_figure(Figure::AtmMaturity, set, cfg)
}

pub fn run_fig4(set: &ParameterSet, cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    run_figure(Figure::ItmMaturity, set, cfg)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 paired points, got {}", xs.len().min(ys.len()))));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
        return Err(Error::DegenerateFit(format!("error {y} has no logarithm")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit { slope, intercept: my - slope * mx, r_squared, n_points: xs.len() })
}

/// One point of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub maturity: f64,
    pub reference_price: f64,
    pub reference_error: f64,
    pub bs_only: f64,
    pub v1: f64,
    pub v2: Option<f64>,
    pub v3: f64,
}

impl ConvergencePoint {
    pub fn abs_error(&self, formula: Formula) -> Option<f64> {
        let p = match formula {
            Formula::V1 => self.v1,
            Formula::V2 => self.v2?,
            Formula::V3 => self.v3,
            Formula::BsOnly => self.bs_only,
        };
        Some((p - self.reference_price).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub formula: Formula,
    pub fit: LogLogFit,
    pub min_abs_error: f64,
    pub max_reference_error: f64,
    /// The reference error is at least ten times below every fitted error.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub set: String,
    pub regime: Regime,
    pub strike: f64,
    pub points: Vec<ConvergencePoint>,
    pub fits: Vec<SlopeFit>,
}

impl ConvergenceReport {
    pub fn fit(&self, formula: Formula) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.formula == formula)
    }
}

/// Strike used for a convergence study in `regime`.
pub fn convergence_strike(set: &ParameterSet, regime: Regime) -> Result<f64> {
    match regime {
        Regime::Itm => Ok(set.itm_strike()),
        Regime::NearAtm => Ok(set.s_t),
        Regime::DeepOtm => Err(Error::Regime {
            regime: regime.label(),
            reason: "convergence orders are stated for ITM and near-ATM strikes".into(),
        }),
    }
}

/// Formulas whose order is claimed in `regime`.
pub fn convergence_formulas(regime: Regime) -> &'static [Formula] {
    match regime {
        Regime::Itm => &[Formula::V1, Formula::V2, Formula::V3],
        _ => &[Formula::V1, Formula::V3],
    }
}

fn convergence_points(
    set: &ParameterSet,
    strike: f64,
    taus: &[f64],
    tol: f64,
    seed: u64,
) -> Result<Vec<ConvergencePoint>> {
    taus.par_iter()
        .map(|&t| {
            let r = evaluate_point(set, strike, t, tol, seed)?;
            Ok(ConvergencePoint {
                maturity: t,
                reference_price: r.reference_price,
                reference_error: r.reference_error,
                bs_only: r.bs_only,
                v1: r.v1,
                v2: r.v2,
                v3: r.v3,
            })
        })
        .collect()
}

fn fit_points(points: &[ConvergencePoint], formula: Formula) -> Result<SlopeFit> {
    let mut taus = Vec::with_capacity(points.len());
    let mut errs = Vec::with_capacity(points.len());
    for p in points {
        let e = p.abs_error(formula).ok_or_else(|| {
            Error::DegenerateFit(format!("{formula} undefined at tau = {}", p.maturity))
        })?;
        taus.push(p.maturity);
        errs.push(e);
    }
    let min_abs_error = errs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_reference_error = points.iter().map(|p| p.reference_error).fold(0.0, f64::max);
    let valid = 10.0 * max_reference_error <= min_abs_error;
    let fit = fit_loglog(&taus, &errs)?;
    Ok(SlopeFit { formula, fit, min_abs_error, max_reference_error, valid })
}

/// Fits `ln |approx - reference|` against `ln tau` on a geometric grid of
/// `cfg.points` maturities in `[0.005, 0.1]`.
///
/// When some approximation error is not ten times larger than the reference
/// error, the lower end of the grid is moved up (by factors of two) and the
/// study repeated; if that leaves less than a factor of four of maturities the
/// result is a degenerate-fit error.
pub fn run_convergence(set: &ParameterSet, regime: Regime, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    if cfg.points < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!("need at least {MIN_FIT_POINTS} maturities, got {}", cfg.points)));
    }
    let strike = convergence_strike(set, regime)?;
    let tol = cfg.tol.unwrap_or(1e-9 * set.s_t);
    let (mut lo, hi) = CONVERGENCE_RANGE;
    loop {
        let taus = geometric_grid(lo, hi, cfg.points);
        let points = convergence_points(set, strike, &taus, tol, cfg.seed)?;
        let fits = convergence_formulas(regime)
            .iter()
            .map(|&f| fit_points(&points, f))
            .collect::<Result<Vec<_>>>()?;
        if fits.iter().all(|f| f.valid) {
            return Ok(ConvergenceReport { set: set.name.clone(), regime, strike, points, fits });
        }
        lo *= 2.0;
        if lo * 4.0 > hi {
            let worst = fits.iter().find(|f| !f.valid).expect("some fit is invalid");
            return Err(Error::DegenerateFit(format!(
                "{} error {:e} is within a factor 10 of the reference error {:e}",
                worst.formula, worst.min_abs_error, worst.max_reference_error
            )));
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn header_comment(out: &mut impl Write, what: &str, set: &ParameterSet, cfg: &ExperimentConfig) -> Result<()> {
    writeln!(
        out,
        "# bns-core {} {what} set: {set} seed={} points={} tol={}",
        env!("CARGO_PKG_VERSION"),
        cfg.seed,
        cfg.points,
        num(cfg.tolerance(set))
    )?;
    Ok(())
}

pub const ROW_COLUMNS: [&str; 15] = [
    "sweep_variable",
    "strike",
    "maturity",
    "reference_price",
    "reference_error",
    "reference_method",
    "bs_only",
    "v1",
    "v2",
    "v3",
    "rel_err_bs",
    "rel_err_v1",
    "rel_err_v3",
    "abs_err_v2",
    "regime",
];

/// Writes sweep rows as CSV after a `#` comment line recording the inputs.
pub fn write_rows(
    out: impl Write,
    figure: Figure,
    set: &ParameterSet,
    cfg: &ExperimentConfig,
    rows: &[ExperimentRow],
) -> Result<()> {
    let mut out = out;
    header_comment(&mut out, &format!("figure={}", figure.number()), set, cfg)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROW_COLUMNS)?;
    for r in rows {
        w.write_record([
            num(r.sweep_variable),
            num(r.strike),
            num(r.maturity),
            num(r.reference_price),
            num(r.reference_error),
            r.reference_method.to_string(),
            num(r.bs_only),
            num(r.v1),
            opt(r.v2),
            num(r.v3),
            num(r.rel_err_bs),
            num(r.rel_err_v1),
            num(r.rel_err_v3),
            opt(r.abs_err_v2),
            r.regime.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-maturity errors, with one `#` comment line per fit.
pub fn write_convergence(
    out: impl Write,
    set: &ParameterSet,
    cfg: &ExperimentConfig,
    report: &ConvergenceReport,
) -> Result<()> {
    let mut out = out;
    let cfg = ExperimentConfig { tol: Some(cfg.tol.unwrap_or(1e-9 * set.s_t)), ..*cfg };
    header_comment(&mut out, &format!("convergence regime={} strike={}", report.regime, num(report.strike)), set, &cfg)?;
    for f in &report.fits {
        writeln!(
            out,
            "# fit {} slope={} intercept={} r_squared={} points={} valid={}",
            f.formula,
            num(f.fit.slope),
            num(f.fit.intercept),
            num(f.fit.r_squared),
            f.fit.n_points,
            f.valid
        )?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "maturity",
        "reference_price",
        "reference_error",
        "bs_only",
        "v1",
        "v2",
        "v3",
        "abs_err_v1",
        "abs_err_v2",
        "abs_err_v3",
    ])?;
    for p in &report.points {
        w.write_record([
            num(p.maturity),
            num(p.reference_price),
            num(p.reference_error),
            num(p.bs_only),
            num(p.v1),
            opt(p.v2),
            num(p.v3),
            opt(p.abs_error(Formula::V1)),
            opt(p.abs_error(Formula::V2)),
            opt(p.abs_error(Formula::V3)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a figure and writes it to `path`.
pub fn write_figure_csv(
    path: impl AsRef<Path>,
    figure: Figure,
    set: &ParameterSet,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    let rows = run_figure(figure, set, cfg)?;
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), figure, set, cfg, &rows)?;
    Ok(rows)
}
