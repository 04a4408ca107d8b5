//! `bns`: price calls under the BNS model and reproduce the sweep experiments.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bns_core::approx::{self, Regime};
use bns_core::experiments::{self, ExperimentConfig, Figure, ParameterSet};
use bns_core::levy::validate_assumptions;
use bns_core::model::{mc_call_price, MarketState, McConfig};
use bns_core::reference::{check_agreement, fft_price, CfGrid};

#[derive(Parser)]
#[command(name = "bns", version, about = "Short-maturity call prices in the BNS stochastic volatility model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one call at t = 0.
    Price {
        /// `nv`, `sch`, or a parameter file.
        #[arg(long)]
        set: String,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        maturity: f64,
        #[arg(long, value_enum, default_value_t = PriceMethod::V3)]
        method: PriceMethod,
        /// Monte Carlo paths.
        #[arg(long, default_value_t = 1_000_000)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Absolute tolerance of the Fourier pricer; defaults to 1e-5 S0.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a sweep and write it as CSV.
    Experiment {
        /// 1, 2, 3, 4 or conv.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        out: PathBuf,
        /// Grid size; 50 for sweeps and 12 for convergence fits.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Reference tolerance; 1e-5 S0 for sweeps and 1e-9 S0 for fits.
        #[arg(long)]
        tol: Option<f64>,
        /// Strike regime of a convergence fit.
        #[arg(long, value_enum, default_value_t = FitRegime::Itm)]
        regime: FitRegime,
    },
    /// Check the model assumptions and cross-check the reference pricers.
    Validate {
        #[arg(long)]
        set: String,
        /// Maturities to check.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0833, 0.4])]
        maturities: Vec<f64>,
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PriceMethod {
    V1,
    V2,
    V3,
    Fft,
    Mc,
    Bs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitRegime {
    Itm,
    Atm,
}

fn price(
    set: &ParameterSet,
    strike: f64,
    maturity: f64,
    method: PriceMethod,
    paths: usize,
    seed: u64,
    tol: Option<f64>,
) -> Result<()> {
    let params = set.params(maturity)?;
    let state = MarketState::initial(&params, strike)?;
    let regime = Regime::of(&state);
    match method {
        PriceMethod::V1 | PriceMethod::V2 | PriceMethod::V3 => {
            let r = match method {
                PriceMethod::V1 => approx::approx_v1(&params, &state),
                PriceMethod::V2 => approx::approx_v2(&params, &state),
                _ => approx::approx_v3(&params, &state),
            }?;
            let note = if r.applicable { "" } else { " (outside its regime)" };
            println!("{} {:.10} regime={} correction={:.6e}{note}", r.formula, r.price, r.regime, r.correction);
        }
        PriceMethod::Bs => println!("BS {:.10} regime={regime}", approx::bs_price(&params, &state)?),
        PriceMethod::Fft => {
            let curve = fft_price(&params, &state, CfGrid::default(), tol.unwrap_or(1e-5 * set.s_t))?;
            println!("FFT {:.10} +/- {:.3e} regime={regime}", curve.centre_price(), curve.error_estimate);
        }
        PriceMethod::Mc => {
            let r = mc_call_price(&params, &state, McConfig { n_paths: paths, seed, ..McConfig::default() })?;
            println!("MC {:.10} se={:.3e} paths={} regime={regime}", r.price, r.std_error, r.n_paths);
        }
    }
    Ok(())
}

fn experiment(
    figure: &str,
    set: &ParameterSet,
    out: &PathBuf,
    points: Option<usize>,
    seed: u64,
    tol: Option<f64>,
    regime: FitRegime,
) -> Result<()> {
    let create = || File::create(out).with_context(|| format!("cannot create {}", out.display()));
    if figure.eq_ignore_ascii_case("conv") {
        let cfg = ExperimentConfig { points: points.unwrap_or(12), seed, tol };
        let regime = match regime {
            FitRegime::Itm => Regime::Itm,
            FitRegime::Atm => Regime::NearAtm,
        };
        let report = experiments::run_convergence(set, regime, &cfg)?;
        experiments::write_convergence(BufWriter::new(create()?), set, &cfg, &report)?;
        for f in &report.fits {
            println!(
                "{} {} {}: slope {:.4} intercept {:.4} R^2 {:.4}{}",
                set.name,
                regime,
                f.formula,
                f.fit.slope,
                f.fit.intercept,
                f.fit.r_squared,
                if f.valid { "" } else { " (invalid: reference error too large)" }
            );
        }
        return Ok(());
    }
    let n: u8 = figure.parse().with_context(|| format!("unknown figure {figure}"))?;
    let figure = Figure::from_number(n)?;
    let cfg = ExperimentConfig { points: points.unwrap_or(50), seed, tol };
    let rows = experiments::run_figure(figure, set, &cfg)?;
    experiments::write_rows(BufWriter::new(create()?), figure, set, &cfg, &rows)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn validate(set: &ParameterSet, maturities: &[f64], paths: usize, seed: u64) -> Result<bool> {
    let nu = set.measure()?;
    let mut ok = true;
    for &t in maturities {
        let report = validate_assumptions(&nu, set.rho, t);
        println!("assumptions at T = {t}:");
        println!("{}", report.to_string().trim_end());
        ok &= report.passed();

        let params = set.params(t)?;
        let state = MarketState::initial(&params, set.s_t)?;
        let fft = fft_price(&params, &state, CfGrid::default(), 1e-5 * set.s_t)?;
        let mc = mc_call_price(&params, &state, McConfig { n_paths: paths, seed, ..McConfig::default() })?;
        let agree = check_agreement(fft.centre_price(), fft.error_estimate, mc.price, mc.std_error);
        println!(
            "{} oracle check at T = {t}, K = S0: fft {:.6} +/- {:.2e}, mc {:.6} se {:.2e}",
            if agree.is_ok() { "pass" } else { "FAIL" },
            fft.centre_price(),
            fft.error_estimate,
            mc.price,
            mc.std_error
        );
        ok &= agree.is_ok();
    }
    Ok(ok)
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Price { set, strike, maturity, method, paths, seed, tol } => {
            price(&ParameterSet::resolve(&set)?, strike, maturity, method, paths, seed, tol)?;
            Ok(true)
        }
        Command::Experiment { figure, set, out, points, seed, tol, regime } => {
            experiment(&figure, &ParameterSet::resolve(&set)?, &out, points, seed, tol, regime)?;
            Ok(true)
        }
        Command::Validate { set, maturities, paths, seed } => {
            if maturities.is_empty() {
                bail!("no maturities given");
            }
            validate(&ParameterSet::resolve(&set)?, &maturities, paths, seed)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
